#pragma once

#include "cmc/config.hpp"
#include "cmc/coupling.hpp"
#include "cmc/error.hpp"
#include "cmc/estimators.hpp"
#include "cmc/experiments.hpp"
#include "cmc/io.hpp"
#include "cmc/langevin.hpp"
#include "cmc/model.hpp"
#include "cmc/ot.hpp"
#include "cmc/parallel.hpp"
#include "cmc/poisson.hpp"
#include "cmc/rng.hpp"
#include "cmc/spectral.hpp"
#include "cmc/variance.hpp"
#include "cmc/zigzag.hpp"
