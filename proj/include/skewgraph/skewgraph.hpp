#pragma once

// Umbrella header for the skewgraph library. The experiment driver
// (skewgraph/experiments.hpp) is kept out because it pulls in the vendored
// JSON header; include it directly where needed.

#include "skewgraph/attractor.hpp"
#include "skewgraph/config.hpp"
#include "skewgraph/emit.hpp"
#include "skewgraph/fiber.hpp"
#include "skewgraph/measures.hpp"
#include "skewgraph/parallel.hpp"
#include "skewgraph/rational.hpp"
#include "skewgraph/rng.hpp"
#include "skewgraph/sets.hpp"
#include "skewgraph/splitting.hpp"
#include "skewgraph/stats.hpp"
#include "skewgraph/symbolic.hpp"
#include "skewgraph/transport.hpp"
#include "skewgraph/zoo.hpp"
