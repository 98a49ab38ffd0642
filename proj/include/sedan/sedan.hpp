#pragma once

#include "sedan/error.hpp"
#include "sedan/estimator.hpp"
#include "sedan/harness.hpp"
#include "sedan/noise.hpp"
#include "sedan/random.hpp"
#include "sedan/sigmodel.hpp"
#include "sedan/subspace.hpp"
