#pragma once

#include "graphot/error.hpp"
#include "graphot/graph.hpp"
#include "graphot/measure.hpp"
#include "graphot/spectral.hpp"
#include "graphot/transport.hpp"
#include "graphot/beckmann.hpp"
#include "graphot/random_walk.hpp"
#include "graphot/analysis.hpp"
#include "graphot/generators.hpp"
#include "graphot/cluster.hpp"
