#pragma once

#include <cstdint>
#include <vector>

#include "splat/dataset_types.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/losses.hpp"
#include "splat/optimizer.hpp"
#include "splat/renderer.hpp"

namespace splat {

struct DensifyThresholds {
  double tau_opa = 0.7;    // opacity below this is a hole
  double tau_color = 0.25; // channel-max absolute color error
  double tau_depth = 0.05; // relative depth error, only where sensor depth valid
};

enum class DensifyReason : std::uint8_t { none = 0, hole = 1, color_error = 2, depth_error = 3 };

struct DensifyMask {
  MaskImage mask;
  Image<std::uint8_t> reason;  // first matching condition, DensifyReason values
  int count = 0;
};

// Pixelwise disjunction of the hole / color-error / depth-error conditions.
// With error_densification off only the opacity-hole condition applies.
DensifyMask densify_mask(const RenderOutput& render, const FrameObservation& frame,
                         const DensifyThresholds& thr, bool error_densification = true);

// Back-projects masked pixels with valid depth on a stride grid. Seeds take the
// pixel color, an isotropic pixel-footprint scale (z * stride / fx), identity
// rotation, and the given opacity.
std::vector<GaussianSeed> seed_from_depth(const DensifyMask& mask, const FrameObservation& frame,
                                          const CameraPose& pose, const CameraIntrinsics& K,
                                          int stride, double initial_opacity = 0.5);

struct MappingConfig {
  int iterations = 60;
  int first_frame_iteration_factor = 3;
  DensifyThresholds thresholds;
  bool error_densification = true;
  bool regularization = true;
  int seed_stride = 2;
  int first_frame_stride = 1;
  double initial_opacity = 0.5;
  LossWeights loss_weights;
  MapLearningRates learning_rates;
};

struct MapFrameReport {
  int gaussians_added = 0;
  std::size_t map_size = 0;
  double final_loss = 0.0;
  double psnr_db = 0.0;
  int adam_skipped = 0;
  int iterations = 0;
};

// One frame's map update: render, densify, seed, snapshot anchors, then the
// regularized optimization loop, then a single importance update from the final
// iteration's mapping-loss gradients.
MapFrameReport map_frame(GaussianMap& map, MapOptimizer& optimizer, const FrameObservation& frame,
                         const CameraPose& pose, const CameraIntrinsics& K,
                         const MappingConfig& config, const RenderSettings& render_settings,
                         double scene_extent, bool first_frame);

}  // namespace splat
