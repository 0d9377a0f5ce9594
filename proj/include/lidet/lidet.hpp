#pragma once
// Umbrella header.

#include "lidet/augment.hpp"
#include "lidet/config.hpp"
#include "lidet/decode.hpp"
#include "lidet/eval.hpp"
#include "lidet/frame.hpp"
#include "lidet/geometry.hpp"
#include "lidet/io.hpp"
#include "lidet/losses.hpp"
#include "lidet/parallel.hpp"
#include "lidet/rng.hpp"
#include "lidet/sim.hpp"
#include "lidet/targets.hpp"
#include "lidet/tta.hpp"
#include "lidet/voxel.hpp"
