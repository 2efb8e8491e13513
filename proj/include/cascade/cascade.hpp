#pragma once

// Umbrella header for the library engines (the CLI headers live in cli/).

#include "cascade/analytic.hpp"
#include "cascade/error.hpp"
#include "cascade/fock_oracle.hpp"
#include "cascade/moments_ode.hpp"
#include "cascade/params.hpp"
#include "cascade/phase_space_mc.hpp"
