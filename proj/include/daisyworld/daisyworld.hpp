#pragma once

// Umbrella header for the Daisyworld tipping-analysis library.

#include "daisyworld/continuation.hpp"
#include "daisyworld/defaults.hpp"
#include "daisyworld/equilibria.hpp"
#include "daisyworld/equilibrium.hpp"
#include "daisyworld/errors.hpp"
#include "daisyworld/geometry.hpp"
#include "daisyworld/io.hpp"
#include "daisyworld/model.hpp"
#include "daisyworld/numerics.hpp"
#include "daisyworld/parallel.hpp"
#include "daisyworld/solver.hpp"
#include "daisyworld/tipping.hpp"
