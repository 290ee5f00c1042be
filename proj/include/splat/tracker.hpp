#pragma once

#include <optional>

#include "splat/dataset_types.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/losses.hpp"
#include "splat/optimizer.hpp"
#include "splat/renderer.hpp"

namespace splat {

// Pose history for the constant-velocity prediction.
struct TrackerState {
  std::optional<CameraPose> prev;
  std::optional<CameraPose> prev_prev;

  void push(const CameraPose& pose) {
    prev_prev = prev;
    prev = pose;
  }
};

// prev ∘ (prev_prev⁻¹ ∘ prev); falls back to prev, then identity.
CameraPose predict_pose(const TrackerState& state);

struct TrackingConfig {
  int iterations = 40;
  LossWeights loss_weights;
  PoseLearningRates learning_rates;
  // Per-iteration exponential learning-rate decay; damps the constant-step
  // oscillation of the adaptive optimizer around the loss cusp.
  double lr_decay = 0.97;
  double early_stop_delta = 1e-5;
  int early_stop_window = 5;
};

struct TrackReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations_used = 0;
  bool converged = false;
  bool aborted_nonfinite = false;
};

// Render-and-compare pose estimation; the map is frozen. Returns the pose with
// the lowest observed loss across iterations.
CameraPose track_frame(const GaussianMap& map, const FrameObservation& frame, TrackerState& state,
                       const CameraIntrinsics& K, const TrackingConfig& config,
                       const RenderSettings& render_settings, TrackReport* report = nullptr);

}  // namespace splat
