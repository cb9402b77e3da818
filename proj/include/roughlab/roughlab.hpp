#pragma once

#include "roughlab/config.hpp"
#include "roughlab/density.hpp"
#include "roughlab/errors.hpp"
#include "roughlab/fbm.hpp"
#include "roughlab/grid.hpp"
#include "roughlab/hashing.hpp"
#include "roughlab/hurst.hpp"
#include "roughlab/kl.hpp"
#include "roughlab/malliavin.hpp"
#include "roughlab/parallel.hpp"
#include "roughlab/positivity.hpp"
#include "roughlab/reports.hpp"
#include "roughlab/rng.hpp"
#include "roughlab/rough_path.hpp"
#include "roughlab/solvers.hpp"
#include "roughlab/tensor.hpp"
#include "roughlab/vector_fields.hpp"
