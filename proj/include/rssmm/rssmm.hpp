#ifndef RSSMM_RSSMM_HPP
#define RSSMM_RSSMM_HPP

#include "rssmm/core/errors.hpp"
#include "rssmm/core/lambert.hpp"
#include "rssmm/core/parallel.hpp"
#include "rssmm/core/types.hpp"
#include "rssmm/decoder.hpp"
#include "rssmm/metrics.hpp"
#include "rssmm/mobility.hpp"
#include "rssmm/msr.hpp"
#include "rssmm/optimizer.hpp"
#include "rssmm/propagation.hpp"
#include "rssmm/road_graph.hpp"
#include "rssmm/simulator.hpp"

#endif  // RSSMM_RSSMM_HPP
