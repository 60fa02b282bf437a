#pragma once

#include "schurtree/approx_cholesky.hpp"
#include "schurtree/config.hpp"
#include "schurtree/dense_laplacian.hpp"
#include "schurtree/dense_oracle.hpp"
#include "schurtree/error.hpp"
#include "schurtree/generators.hpp"
#include "schurtree/graph.hpp"
#include "schurtree/random.hpp"
#include "schurtree/reff_estimator.hpp"
#include "schurtree/stats.hpp"
#include "schurtree/tree_sampler.hpp"
