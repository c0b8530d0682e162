#pragma once

// Umbrella header for the adaptive Neyman allocation toolkit.

#include "neyman/core.hpp"
#include "neyman/data.hpp"
#include "neyman/designs.hpp"
#include "neyman/estimators.hpp"
#include "neyman/json_io.hpp"
#include "neyman/numeric.hpp"
#include "neyman/oracle.hpp"
#include "neyman/rng.hpp"
#include "neyman/simulation.hpp"
