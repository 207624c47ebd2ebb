#pragma once

#include "csgm/bloom.hpp"
#include "csgm/common.hpp"
#include "csgm/detection.hpp"
#include "csgm/generator.hpp"
#include "csgm/graph.hpp"
#include "csgm/graph_io.hpp"
#include "csgm/metrics.hpp"
#include "csgm/minhash.hpp"
#include "csgm/protocol.hpp"
#include "csgm/set_discovery.hpp"
#include "csgm/sgm.hpp"
