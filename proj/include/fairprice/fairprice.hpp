#pragma once

#include "fairprice/demand_model.hpp"
#include "fairprice/environment.hpp"
#include "fairprice/errors.hpp"
#include "fairprice/estimation.hpp"
#include "fairprice/experiments.hpp"
#include "fairprice/fair_bandit.hpp"
#include "fairprice/fair_policy_solver.hpp"
#include "fairprice/io.hpp"
#include "fairprice/numerics.hpp"
#include "fairprice/svg.hpp"
#include "fairprice/utility_distributions.hpp"
