#pragma once

#include "popdcop/aed/agent.hpp"
#include "popdcop/aed/operators.hpp"
#include "popdcop/als/local_search.hpp"
#include "popdcop/als/modified_als.hpp"
#include "popdcop/baselines/baselines.hpp"
#include "popdcop/benchgen.hpp"
#include "popdcop/core/instance_io.hpp"
#include "popdcop/core/model.hpp"
#include "popdcop/dpsa/annealing.hpp"
#include "popdcop/dpsa/dpsa.hpp"
#include "popdcop/experiment.hpp"
#include "popdcop/pseudo_tree.hpp"
#include "popdcop/sim/engine.hpp"
#include "popdcop/sim/rng.hpp"
#include "popdcop/stats.hpp"
