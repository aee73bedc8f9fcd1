// qpair.hpp: umbrella header.

#pragma once

#include "qpair/complexity.hpp"
#include "qpair/core.hpp"
#include "qpair/io.hpp"
#include "qpair/jc_dynamics.hpp"
#include "qpair/measurement_sim.hpp"
#include "qpair/rng.hpp"
#include "qpair/tomography.hpp"
