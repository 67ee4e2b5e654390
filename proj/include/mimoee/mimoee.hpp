#pragma once

#include "mimoee/asymptotic_rates.hpp"
#include "mimoee/ee_optimizer.hpp"
#include "mimoee/error.hpp"
#include "mimoee/monte_carlo.hpp"
#include "mimoee/parallel.hpp"
#include "mimoee/power_model.hpp"
#include "mimoee/rzf.hpp"
#include "mimoee/system_model.hpp"
