#pragma once

#include "basis1d.hpp"
#include "coefficients.hpp"
#include "experiment.hpp"
#include "fiber.hpp"
#include "grid.hpp"
#include "matvec.hpp"
#include "multi_index.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "problems.hpp"
#include "pullback.hpp"
#include "quadrature.hpp"
#include "solver.hpp"
#include "stencil.hpp"
#include "transform.hpp"
