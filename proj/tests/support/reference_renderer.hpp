#pragma once

// Exhaustive per-pixel compositor used as the rendering oracle: no tiles, no
// early termination, and its own projection math. Kept independent of the
// library's traversal so it can arbitrate.

#include <Eigen/Core>

#include "splat/gaussian_map.hpp"
#include "splat/geometry.hpp"
#include "splat/image.hpp"

namespace splat::testing {

struct ReferenceImages {
  ImageD color;
  ImageD depth;
  ImageD opacity;
};

ReferenceImages reference_render(const GaussianMap& map, const CameraPose& pose,
                                 const CameraIntrinsics& K, double alpha_max = 0.99);

}  // namespace splat::testing
