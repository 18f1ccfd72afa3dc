#pragma once

// Umbrella header for the CRPS estimation library.

#include "maxcrps/correlation.hpp"
#include "maxcrps/crps.hpp"
#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/estimator.hpp"
#include "maxcrps/harness.hpp"
#include "maxcrps/io.hpp"
#include "maxcrps/models.hpp"
#include "maxcrps/nelder_mead.hpp"
#include "maxcrps/numerics.hpp"
#include "maxcrps/rng.hpp"
#include "maxcrps/sampling.hpp"
#include "maxcrps/special_fn.hpp"
