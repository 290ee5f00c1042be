#pragma once

#include <Eigen/Core>
#include <vector>

#include "splat/dataset_types.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/image.hpp"
#include "splat/renderer.hpp"

namespace splat {

struct LossWeights {
  double lambda_color = 0.8;
  double lambda_depth = 1.0;
  double lambda_ssim = 0.2;
  double lambda_color_track = 0.5;
  double lambda_depth_track = 1.0;
};

struct L1Result {
  double value = 0.0;
  ImageD grad_a;  // d value / d a
};

// Mean |a-b| over masked pixels (all channels); empty mask yields zero loss and
// zero gradient. sign(0) = 0.
L1Result l1_image(const ImageD& a, const ImageD& b, const MaskImage& mask);

struct SsimResult {
  double value = 0.0;  // mean SSIM over channels and valid window positions
  ImageD grad_a;       // d value / d a
};

// 11x11 Gaussian window, sigma 1.5, C1 = 0.01^2, C2 = 0.03^2, valid-mode windows.
SsimResult ssim(const ImageD& a, const ImageD& b);

// sRGB (D65) to CIE-LAB, returning only the chroma channels (a, b).
ImageD rgb_to_ab(const ImageD& rgb);
// Adjoint of rgb_to_ab: pulls a gradient on (a,b) back to RGB.
ImageD rgb_to_ab_backward(const ImageD& rgb, const ImageD& d_ab);

// Depth terms only count pixels the sensor saw and the map already covers.
MaskImage depth_loss_mask(const ImageD& rendered_opacity, const ImageD& sensor_depth);

struct ImageLossResult {
  double value = 0.0;
  ImageD d_color;  // upstream gradient for render_backward
  ImageD d_depth;
};

ImageLossResult mapping_loss(const RenderOutput& render, const FrameObservation& frame,
                             const LossWeights& weights);

ImageLossResult tracking_loss(const RenderOutput& render, const FrameObservation& frame,
                              const LossWeights& weights);

struct RegularizationResult {
  double value = 0.0;
  // Parallel to `indices`; gradients w.r.t. exposed scale, color, and position
  // (position receives the depth-anchor chain through the current camera).
  std::vector<std::size_t> indices;
  std::vector<Eigen::Vector3d> d_scale;
  std::vector<Eigen::Vector3d> d_color;
  std::vector<Eigen::Vector3d> d_position;
};

// Importance-weighted L1 anchoring of scale, color, and camera-space depth for
// the touched set; never-seen Gaussians carry zero weight.
RegularizationResult regularization_loss(const GaussianMap& map,
                                         std::span<const std::size_t> touched,
                                         const CameraPose& pose);

}  // namespace splat
