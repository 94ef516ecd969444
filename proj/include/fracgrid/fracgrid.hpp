#pragma once

#include "fracgrid/time_grid.hpp"
#include "fracgrid/grid.hpp"
#include "fracgrid/kernels.hpp"
#include "fracgrid/exponents.hpp"
#include "fracgrid/degiorgi.hpp"
#include "fracgrid/solver.hpp"
#include "fracgrid/config.hpp"
#include "fracgrid/harness.hpp"
