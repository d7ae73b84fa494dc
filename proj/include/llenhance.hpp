#pragma once

// Umbrella header.

#include "llenhance/error.hpp"
#include "llenhance/image.hpp"
#include "llenhance/frame_io.hpp"
#include "llenhance/parallel.hpp"
#include "llenhance/patchwork.hpp"
#include "llenhance/nn_ops.hpp"
#include "llenhance/weights.hpp"
#include "llenhance/generator.hpp"
#include "llenhance/passthrough.hpp"
#include "llenhance/temporal.hpp"
#include "llenhance/pipeline.hpp"
