#pragma once

/**
 * Umbrella header: the full solver surface.
 *
 * mfglp solves mixed optimal-stopping/control problems on a bounded interval
 * by discretizing the controlled diffusion into a locally consistent Markov
 * chain, posing the occupation-measure linear program over that chain, and
 * certifying the answer against an independent dynamic-programming solve.
 * Mean-field games are handled by a damped best-response iteration over
 * frozen moment vectors, and an N-agent Monte Carlo simulator quantifies the
 * distance between finite populations and the mean-field solution.
 */

#include "mfglp/chain.hpp"
#include "mfglp/config.hpp"
#include "mfglp/core.hpp"
#include "mfglp/dp.hpp"
#include "mfglp/grid.hpp"
#include "mfglp/io.hpp"
#include "mfglp/lp.hpp"
#include "mfglp/measures.hpp"
#include "mfglp/mfg.hpp"
#include "mfglp/policy.hpp"
#include "mfglp/problem.hpp"
#include "mfglp/registry.hpp"
#include "mfglp/rng.hpp"
#include "mfglp/sim.hpp"
#include "mfglp/simplex.hpp"
#include "mfglp/verify.hpp"
