#pragma once

// Umbrella header for the full library.

#include "gazemap/dataio.hpp"
#include "gazemap/eval.hpp"
#include "gazemap/grid.hpp"
#include "gazemap/models.hpp"
#include "gazemap/peaks.hpp"
#include "gazemap/render.hpp"
#include "gazemap/simgen.hpp"
#include "gazemap/tensor.hpp"
