#pragma once

#include "fedpower/baselines.hpp"
#include "fedpower/config.hpp"
#include "fedpower/data.hpp"
#include "fedpower/model.hpp"
#include "fedpower/partition.hpp"
#include "fedpower/population.hpp"
#include "fedpower/rng.hpp"
#include "fedpower/runner.hpp"
#include "fedpower/solver.hpp"
#include "fedpower/training.hpp"
#include "fedpower/wireless.hpp"
