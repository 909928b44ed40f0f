#pragma once

#include <cdlab/types.hpp>
#include <cdlab/core_model.hpp>
#include <cdlab/operators.hpp>
#include <cdlab/solvers.hpp>
#include <cdlab/verification.hpp>
#include <cdlab/io.hpp>
