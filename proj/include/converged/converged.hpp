#pragma once

#include "converged/time.hpp"
#include "converged/rational.hpp"
#include "converged/network.hpp"
#include "converged/scenario.hpp"
#include "converged/schedule.hpp"
#include "converged/ilp_model.hpp"
#include "converged/atsm_builder.hpp"
#include "converged/solver.hpp"
#include "converged/lp_format.hpp"
#include "converged/schedule_check.hpp"
#include "converged/netsim.hpp"
#include "converged/metrics.hpp"
#include "converged/pipeline.hpp"
#include "converged/sweep.hpp"
