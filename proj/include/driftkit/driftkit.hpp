#pragma once

// Convenience umbrella: the whole library in one include.

#include "bounds.hpp"
#include "cnf.hpp"
#include "estimator.hpp"
#include "graph.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "processes/barrier.hpp"
#include "processes/coupon.hpp"
#include "processes/generators.hpp"
#include "processes/inversion_sort.hpp"
#include "processes/moran.hpp"
#include "processes/recolour.hpp"
#include "processes/two_sat.hpp"
#include "processes/vertex_cover.hpp"
#include "random.hpp"
