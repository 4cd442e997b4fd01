#pragma once

#include "mmq/errors.hpp"
#include "mmq/random.hpp"
#include "mmq/env_chain.hpp"
#include "mmq/model.hpp"
#include "mmq/example_models.hpp"
#include "mmq/table.hpp"
#include "mmq/trace.hpp"
#include "mmq/policies.hpp"
#include "mmq/simulator.hpp"
#include "mmq/skorohod.hpp"
#include "mmq/scaling.hpp"
#include "mmq/ergodic.hpp"
#include "mmq/stats.hpp"
#include "mmq/cost.hpp"
#include "mmq/bcp.hpp"
#include "mmq/config.hpp"
#include "mmq/experiment.hpp"
