#pragma once

// Umbrella header.

#include "rsr/alg_convex.hpp"
#include "rsr/alg_independent.hpp"
#include "rsr/bounds.hpp"
#include "rsr/common.hpp"
#include "rsr/harness.hpp"
#include "rsr/matstore.hpp"
#include "rsr/metrics.hpp"
#include "rsr/sketch.hpp"
