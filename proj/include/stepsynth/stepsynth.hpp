#pragma once

#include "stepsynth/chain_gramian.hpp"
#include "stepsynth/ctrl_fn.hpp"
#include "stepsynth/cubic.hpp"
#include "stepsynth/errors.hpp"
#include "stepsynth/integrator.hpp"
#include "stepsynth/io.hpp"
#include "stepsynth/mappability.hpp"
#include "stepsynth/roots.hpp"
#include "stepsynth/scenarios.hpp"
#include "stepsynth/sim.hpp"
#include "stepsynth/stepwise.hpp"
