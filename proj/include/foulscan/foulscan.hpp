#pragma once

// Umbrella header for the biofouling assessment toolkit.

#include "foulscan/errors.hpp"
#include "foulscan/fit.hpp"
#include "foulscan/frame_provider.hpp"
#include "foulscan/io.hpp"
#include "foulscan/kmeans.hpp"
#include "foulscan/metrics.hpp"
#include "foulscan/model.hpp"
#include "foulscan/pipeline.hpp"
#include "foulscan/smoothing.hpp"
#include "foulscan/summarize.hpp"
#include "foulscan/vec_math.hpp"
#include "foulscan/version.hpp"
