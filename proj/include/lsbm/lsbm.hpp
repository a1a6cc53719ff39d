#ifndef LSBM_LSBM_HPP
#define LSBM_LSBM_HPP

#include "lsbm/config.hpp"
#include "lsbm/embedding_io.hpp"
#include "lsbm/experiments.hpp"
#include "lsbm/graph.hpp"
#include "lsbm/kernels.hpp"
#include "lsbm/kmeans.hpp"
#include "lsbm/model.hpp"
#include "lsbm/random.hpp"
#include "lsbm/sampler.hpp"
#include "lsbm/simulate.hpp"
#include "lsbm/spectral.hpp"
#include "lsbm/summary.hpp"

#endif
