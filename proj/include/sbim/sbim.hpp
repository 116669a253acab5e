#pragma once

#include "sbim/autotune.hpp"
#include "sbim/confidence_set.hpp"
#include "sbim/distributions.hpp"
#include "sbim/error.hpp"
#include "sbim/features.hpp"
#include "sbim/io.hpp"
#include "sbim/k1.hpp"
#include "sbim/mesle_test.hpp"
#include "sbim/metamodel.hpp"
#include "sbim/models/gamma_poisson.hpp"
#include "sbim/models/gauss_location.hpp"
#include "sbim/models/lgss.hpp"
#include "sbim/models/stovol.hpp"
#include "sbim/optim.hpp"
#include "sbim/parallel.hpp"
#include "sbim/particle_filter.hpp"
#include "sbim/pmcmc.hpp"
#include "sbim/proxy_test.hpp"
#include "sbim/rng.hpp"
#include "sbim/types.hpp"
