#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "splat/dataset_types.hpp"
#include "splat/geometry.hpp"

namespace splat {

struct TumLoadOptions {
  double max_association_dt = 0.02;  // seconds
  int max_frames = 0;                // 0 = all
  int downscale = 1;                 // integer resolution divisor
  std::optional<CameraIntrinsics> intrinsics_override;
};

struct LoadedDataset {
  std::vector<FrameObservation> frames;
  Trajectory ground_truth;  // per-frame associated poses; empty in degraded mode
  CameraIntrinsics intrinsics;
  bool has_ground_truth = false;
  int dropped_frames = 0;
};

// TUM-RGBD directory layout: rgb.txt / depth.txt / groundtruth.txt index files,
// PNG images, 16-bit depth at depth_scale (default 1/5000 m). RGB, depth and
// ground truth are associated by nearest timestamp within max_association_dt;
// unmatched entries are dropped and counted. Intrinsics come from an optional
// calibration.txt ("fx fy cx cy [depth_scale]"), the override, or fr1 defaults.
LoadedDataset load_tum_rgbd(const std::filesystem::path& dir, const TumLoadOptions& options = {});

// Greedy mutual-nearest association of two ascending timestamp lists; returns
// index pairs. Exposed for the loader's tests.
std::vector<std::pair<std::size_t, std::size_t>> associate_timestamps(
    const std::vector<double>& a, const std::vector<double>& b, double max_dt);

// TUM trajectory text format: "timestamp tx ty tz qx qy qz qw" per line
// (scalar-last in the file; scalar-first in memory).
void save_tum_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_tum_trajectory(const std::filesystem::path& path);

// Integer-divisor downsampling: RGB by box average, depth by nearest sample so
// invalid zeros never bleed into valid readings. Adjusts intrinsics to match.
FrameObservation downscale_frame(const FrameObservation& frame, int divisor);
CameraIntrinsics downscale_intrinsics(const CameraIntrinsics& K, int divisor);

}  // namespace splat
