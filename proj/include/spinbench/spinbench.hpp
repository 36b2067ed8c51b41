#pragma once

// Umbrella header for the pulse-EPR simulation and relaxometry workbench.

#include "spinbench/assign.hpp"
#include "spinbench/bloch.hpp"
#include "spinbench/constants.hpp"
#include "spinbench/csv.hpp"
#include "spinbench/debye.hpp"
#include "spinbench/decay_models.hpp"
#include "spinbench/dsp.hpp"
#include "spinbench/errors.hpp"
#include "spinbench/fit.hpp"
#include "spinbench/isotopes.hpp"
#include "spinbench/quadrature.hpp"
#include "spinbench/relaxation.hpp"
#include "spinbench/resonance.hpp"
#include "spinbench/rng.hpp"
#include "spinbench/sequence.hpp"
#include "spinbench/simulator.hpp"
#include "spinbench/trace.hpp"
#include "spinbench/version.hpp"
