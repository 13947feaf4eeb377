#pragma once

#include "remcd/basis.hpp"
#include "remcd/core.hpp"
#include "remcd/csv.hpp"
#include "remcd/discovery.hpp"
#include "remcd/dispersion.hpp"
#include "remcd/error.hpp"
#include "remcd/glmfit.hpp"
#include "remcd/io.hpp"
#include "remcd/netstats.hpp"
#include "remcd/parallel.hpp"
#include "remcd/rng.hpp"
#include "remcd/sampler.hpp"
#include "remcd/simulate.hpp"
