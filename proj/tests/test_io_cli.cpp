#include <cdlab/cli.hpp>
#include <cdlab/io.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace cdlab;
namespace fs = std::filesystem;

namespace {

Vec vec(std::initializer_list<double> v)
{
    Vec out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("cdlab_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int cli(std::vector<std::string> args)
    {
        args.insert(args.begin(), "cdlab");
        out_.str("");
        err_.str("");
        return cli::main(args, out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::istringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) row.push_back(f);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

TEST(ProblemJson, QuadraticRoundTrip)
{
    const auto p = gen_zmatrix_quadratic(4, 9);
    const auto q = io::problem_from_json(io::problem_to_json(p));
    EXPECT_EQ(q.quadratic()->hessian(), p.quadratic()->hessian());
    EXPECT_EQ(q.quadratic()->linear(), p.quadratic()->linear());
    EXPECT_EQ(q.lambda(), p.lambda());
    EXPECT_EQ(q.lipschitz(), p.lipschitz());
}

TEST(ProblemJson, LogisticRoundTripAndMissingL)
{
    const ProblemSpec p(gen_logistic_data(12, 3, 1), 0.2);
    const auto q = io::problem_from_json(io::problem_to_json(p));
    ASSERT_NE(q.logistic(), nullptr);
    EXPECT_EQ(q.logistic()->design(), p.logistic()->design());
    EXPECT_EQ(q.lipschitz(), p.lipschitz());

    auto j = io::problem_to_json(ProblemSpec(QuadraticForm(Mat::Identity(2, 2) * 3.0, Vec::Zero(2)), 0.1));
    j.erase("L");
    EXPECT_NEAR(io::problem_from_json(j).lipschitz(), 3.0, 1e-7);
}

TEST(ProblemJson, Rejects)
{
    EXPECT_THROW(io::problem_from_json(nlohmann::json{{"kind", "cubic"}}), io::IoError);
    auto j = io::problem_to_json(gen_zmatrix_quadratic(3, 0));
    j["b"] = nlohmann::json::array({1.0, 2.0});
    EXPECT_THROW(io::problem_from_json(j), DimensionError);
    j = io::problem_to_json(gen_zmatrix_quadratic(3, 0));
    j["lambda"] = -1.0;
    EXPECT_THROW(io::problem_from_json(j), DomainError);
}

TEST(Csv, HeaderDetection)
{
    const Mat with = io::parse_csv("x1,x2,y\n1,2,3\n4,5,6\n");
    const Mat without = io::parse_csv("1,2,3\n4,5,6\n");
    EXPECT_EQ(with, without);
    EXPECT_EQ(with.rows(), 2);
    EXPECT_EQ(with(1, 2), 6.0);
    EXPECT_THROW(io::parse_csv("1,2\n3,x\n"), io::IoError);
    EXPECT_THROW(io::parse_csv("1,2\n3\n"), io::IoError);
    EXPECT_THROW(io::parse_csv("a,b\n"), io::IoError);
}

TEST(TraceCsv, HeaderAndRoundTrippableDoubles)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(2, 2), vec({-1.0 / 3.0, 0.0})), 0.0, 1.0);
    SolverConfig cfg;
    cfg.max_outer_iters = 2;
    const Trace tr = run(Algorithm::GD, p, vec({0.1, 0.2}), cfg);
    const auto rows = csv_rows(io::trace_to_csv(tr));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"k", "F", "residual", "x_1", "x_2"}));
    EXPECT_EQ(std::stod(rows[1][1]), tr.f_values[0]);
    EXPECT_EQ(std::stod(rows[2][3]), tr.iterates[1](0));
    EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "inf");
}

TEST_F(CliTest, GenZMatrixAndIsotonicityLine)
{
    const std::string prob = path("p.json");
    EXPECT_EQ(cli({"gen", "--dim", "5", "--seed", "7", "--out", prob}), 0);
    EXPECT_NE(out_.str().find("isotonicity: pass"), std::string::npos);
    const auto p = io::load_problem(prob);
    EXPECT_EQ(p.dim(), 5);
    EXPECT_EQ(p.quadratic()->hessian(), gen_zmatrix_quadratic(5, 7).quadratic()->hessian());
}

TEST_F(CliTest, GenNegativeControlReportsFail)
{
    EXPECT_EQ(cli({"gen", "--kind", "negative-control", "--out", path("n.json")}), 0);
    EXPECT_NE(out_.str().find("isotonicity: fail"), std::string::npos);
}

TEST_F(CliTest, GenLassoFromCsv)
{
    io::write_file(path("d.csv"), "a,b,y\n1,0,1\n0,2,2\n1,1,0\n");
    ASSERT_EQ(cli({"gen", "--kind", "lasso", "--csv", path("d.csv"), "--lambda", "0.1", "--out", path("l.json")}), 0);
    const auto p = io::load_problem(path("l.json"));
    Mat x(3, 2);
    x << 1, 0, 0, 2, 1, 1;
    const Vec y = vec({1, 2, 0});
    EXPECT_LE((p.quadratic()->hessian() - x.transpose() * x / 3.0).norm(), 1e-15);
    EXPECT_LE((p.quadratic()->linear() + x.transpose() * y / 3.0).norm(), 1e-15);
    EXPECT_EQ(cli({"gen", "--kind", "lasso", "--csv", path("d.csv")}), 2);
}

TEST_F(CliTest, RunScalarQuadraticTrace)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(1, 1), Vec::Zero(1)), 0.0, 1.0);
    io::save_problem(path("s.json"), p);
    ASSERT_EQ(cli({"run", "--problem", path("s.json"), "--start", "given", "--x0", "1", "--alg", "gd", "--iters",
                   "3", "--out", path("t")}),
              0);
    const auto rows = csv_rows(io::read_file(path("t_gd.csv")));
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(std::stod(rows[1][1]), 0.5);
    for (std::size_t k = 2; k < rows.size(); ++k) EXPECT_EQ(std::stod(rows[k][1]), 0.0);
    const auto j = nlohmann::json::parse(io::read_file(path("t_gd.json")));
    EXPECT_EQ(j["algorithm"], "gd");
    EXPECT_EQ(j["f_values"].size(), 4u);
}

TEST_F(CliTest, RunAllIsDeterministic)
{
    ASSERT_EQ(cli({"run", "--dim", "6", "--seed", "2", "--start", "super", "--iters", "20", "--out", path("a")}), 0);
    ASSERT_EQ(cli({"run", "--dim", "6", "--seed", "2", "--start", "super", "--iters", "20", "--out", path("b")}), 0);
    for (const char* alg : {"gd", "ccd", "ccm"}) {
        for (const char* ext : {".csv", ".json"}) {
            const std::string s = std::string("_") + alg + ext;
            EXPECT_EQ(io::read_file(path("a") + s), io::read_file(path("b") + s)) << s;
        }
    }
    const auto j = nlohmann::json::parse(io::read_file(path("a_ccm.json")));
    ASSERT_FALSE(j["tau_log"].empty());
    EXPECT_GE(j["tau_log"][0]["j"].get<int>(), 1);
}

TEST_F(CliTest, RunRecordInner)
{
    ASSERT_EQ(cli({"run", "--dim", "3", "--alg", "ccd", "--iters", "2", "--record-inner", "--out", path("r")}), 0);
    const auto j = nlohmann::json::parse(io::read_file(path("r_ccd.json")));
    ASSERT_EQ(j["inner"].size(), 2u);
    EXPECT_EQ(j["inner"][0].size(), 4u);
}

TEST_F(CliTest, VerifyVerdictAndOutputs)
{
    io::save_problem(path("p.json"), gen_zmatrix_quadratic(5, 7));
    EXPECT_EQ(cli({"verify", "--problem", path("p.json"), "--start", "super", "--iters", "50", "--out", path("rep")}),
              0);
    EXPECT_NE(out_.str().find("verdict: true"), std::string::npos);
    const auto j = nlohmann::json::parse(io::read_file(path("rep.json")));
    EXPECT_TRUE(j["overall"].get<bool>());
    const auto rows = csv_rows(io::read_file(path("rep.csv")));
    EXPECT_EQ(rows[0], (std::vector<std::string>{"k", "F_gd", "F_ccd", "F_ccm", "bound", "dominance_ok"}));
    EXPECT_EQ(rows.size(), 52u);

    EXPECT_EQ(cli({"verify", "--problem", path("p.json"), "--start", "sub", "--iters", "50", "--out", path("rep")}), 0);
}

TEST_F(CliTest, VerifyNegativeControlExitsTwo)
{
    ASSERT_EQ(cli({"gen", "--kind", "negative-control", "--out", path("n.json")}), 0);
    EXPECT_EQ(cli({"verify", "--problem", path("n.json"), "--start", "super", "--out", path("rep")}), 2);
    EXPECT_NE(err_.str().find("isotonicity precondition failed"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("rep.json")));

    const int rc = cli({"verify", "--problem", path("n.json"), "--start", "super", "--report-only", "--out",
                        path("rep")});
    EXPECT_EQ(rc, 1);
    const auto j = nlohmann::json::parse(io::read_file(path("rep.json")));
    EXPECT_TRUE(j["report_only"].get<bool>());
    EXPECT_FALSE(j["overall"].get<bool>());
    int broken = 0;
    for (const auto& r : j["per_iteration"]) broken += r["dominance_ok"].get<bool>() ? 0 : 1;
    EXPECT_GT(broken, 0);
}

TEST_F(CliTest, ClassifyPrintsKind)
{
    const ProblemSpec p(QuadraticForm(Mat::Identity(2, 2), vec({-1, -1})), 0.1, 1.0);
    io::save_problem(path("c.json"), p);
    ASSERT_EQ(cli({"classify", "--problem", path("c.json"), "--x0", "2,-2"}), 0);
    const auto j = nlohmann::json::parse(out_.str());
    EXPECT_EQ(j["kind"], "neither");
    EXPECT_NEAR(j["slack"][0].get<double>(), 1.1, 1e-15);
    ASSERT_EQ(cli({"classify", "--problem", path("c.json"), "--x0", "0.9,0.9"}), 0);
    EXPECT_EQ(nlohmann::json::parse(out_.str())["kind"], "exact");
    EXPECT_EQ(cli({"classify", "--problem", path("c.json"), "--x0", "1,2,3"}), 2);
}

TEST_F(CliTest, ExitCodesForBadInput)
{
    EXPECT_EQ(cli({}), 2);
    EXPECT_EQ(cli({"frobnicate"}), 2);
    EXPECT_EQ(cli({"run", "--problem", path("missing.json")}), 2);
    io::write_file(path("bad.json"), "{not json");
    EXPECT_EQ(cli({"run", "--problem", path("bad.json")}), 2);
    EXPECT_EQ(cli({"run", "--dim", "3", "--alg", "newton"}), 2);
    EXPECT_EQ(cli({"--help"}), 0);
}

TEST_F(CliTest, JsonConfigFeedsSubcommandOptions)
{
    io::write_file(path("cfg.json"), R"({"dim": 4, "seed": 1, "alg": "gd", "iters": 7, "out": ")" + path("c") +
                                         R"("})");
    ASSERT_EQ(cli({"run", "--config", path("cfg.json")}), 0);
    EXPECT_EQ(csv_rows(io::read_file(path("c_gd.csv"))).size(), 9u);
    EXPECT_FALSE(fs::exists(path("c_ccd.csv")));

    ASSERT_EQ(cli({"run", "--config", path("cfg.json"), "--iters", "3"}), 0);
    EXPECT_EQ(csv_rows(io::read_file(path("c_gd.csv"))).size(), 5u);
}
