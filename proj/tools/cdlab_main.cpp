#include <cdlab/cli.hpp>

int main(int argc, char** argv)
{
    return cdlab::cli::main(std::vector<std::string>(argv, argv + argc));
}
