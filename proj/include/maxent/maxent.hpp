#pragma once

#include "maxent/errors.hpp"
#include "maxent/experiments.hpp"
#include "maxent/io.hpp"
#include "maxent/linmap.hpp"
#include "maxent/oracles.hpp"
#include "maxent/priors.hpp"
#include "maxent/solver.hpp"
