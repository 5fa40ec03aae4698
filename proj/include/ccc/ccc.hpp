#pragma once

// Umbrella header for the condensation-concatenation continual-learning
// library.

#include "ccc/bench.hpp"
#include "ccc/condense.hpp"
#include "ccc/error.hpp"
#include "ccc/gradcheck.hpp"
#include "ccc/graph.hpp"
#include "ccc/history.hpp"
#include "ccc/io.hpp"
#include "ccc/matrix.hpp"
#include "ccc/metrics.hpp"
#include "ccc/nn.hpp"
#include "ccc/replay.hpp"
#include "ccc/rng.hpp"
