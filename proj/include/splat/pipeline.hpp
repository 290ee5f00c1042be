#pragma once

#include <optional>
#include <vector>

#include "splat/config.hpp"
#include "splat/dataset_types.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/mapper.hpp"
#include "splat/tracker.hpp"

namespace splat {

struct FrameReport {
  int index = 0;
  double timestamp = 0.0;
  TrackReport track;
  MapFrameReport map;
  double track_ms = 0.0;
  double map_ms = 0.0;
};

struct FinalMetrics {
  std::optional<double> ate_rmse_cm;  // absent without ground truth
  double psnr_db = 0.0;
  double ssim = 0.0;
  double depth_l1_cm = 0.0;
  std::size_t map_size = 0;
  double runtime_s = 0.0;
  double scene_extent = 0.0;
};

struct SlamResult {
  Trajectory estimated;
  GaussianMap map;
  std::vector<FrameReport> reports;
  FinalMetrics metrics;
  CameraIntrinsics intrinsics;
};

// Frame 0 is mapped at the anchored pose (first ground-truth pose when
// available); every later frame is tracked then mapped. Deterministic for a
// fixed config, seed and thread count. Output files are written when
// config.output.directory is set.
SlamResult run_slam(const RunConfig& config);

// Same pipeline on frames already in memory (the synthetic path and tests).
SlamResult run_slam_on_frames(const std::vector<FrameObservation>& frames,
                              const CameraIntrinsics& K, const Trajectory* ground_truth,
                              const RunConfig& config);

// Renders each trajectory pose from the map and scores against the paired
// frames: mean PSNR/SSIM on color, L1 (cm) on depth where both are valid.
FinalMetrics evaluate_map_on_frames(const GaussianMap& map, const Trajectory& poses,
                                    const std::vector<FrameObservation>& frames,
                                    const CameraIntrinsics& K, const RenderSettings& settings);

// 2 * 95th percentile of the first frame's valid depths, clamped to [1, 50] m.
double auto_scene_extent(const FrameObservation& frame);

// Color, 16-bit depth (TUM 1/5000 m scale) and opacity PNG dumps.
void dump_debug_render(const GaussianMap& map, const CameraPose& pose, const CameraIntrinsics& K,
                       const RenderSettings& settings, const std::filesystem::path& dir,
                       const std::string& stem);

}  // namespace splat
