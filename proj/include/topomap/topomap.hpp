#pragma once

#include "topomap/classify.hpp"
#include "topomap/common.hpp"
#include "topomap/features.hpp"
#include "topomap/pipeline.hpp"
#include "topomap/planefit.hpp"
#include "topomap/png_io.hpp"
#include "topomap/pointcloud.hpp"
#include "topomap/raster.hpp"
#include "topomap/render.hpp"
#include "topomap/rng.hpp"
#include "topomap/synth.hpp"
#include "topomap/topo.hpp"
