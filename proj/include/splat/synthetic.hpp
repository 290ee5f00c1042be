#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "splat/dataset_types.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/geometry.hpp"
#include "splat/renderer.hpp"

namespace splat {

// Procedural desk-scale scene: a textured back wall and floor plus foreground
// blobs that cause parallax and disocclusion. Frames are rendered from the
// ground-truth Gaussian map itself, so every observation is exactly
// representable by the model class. Deterministic for a fixed seed.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  int frames = 50;
  int width = 64;
  int height = 64;
  double focal = 64.0;  // fx = fy

  // scene
  double wall_depth = 3.2;      // meters in front of the trajectory origin
  double wall_spacing_px = 2.0; // Gaussian grid pitch in pixels at wall depth
  int clutter = 12;             // foreground blobs
  bool floor = true;

  // trajectory: "sweep" combines lateral translation with a gentle yaw;
  // "pan" is a monotone yaw sweep that never revisits its start view.
  std::string trajectory = "sweep";
  double travel = 0.35;      // lateral half-amplitude, meters
  double yaw_half_deg = 8.0; // half-amplitude of the yaw sweep

  double fps = 30.0;
};

struct SyntheticDataset {
  std::vector<FrameObservation> frames;
  Trajectory trajectory;  // ground truth
  GaussianMap map;        // ground-truth scene
  CameraIntrinsics intrinsics;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Writes the dataset as a TUM-layout directory (rgb.txt/depth.txt/
// groundtruth.txt, PNG images, calibration.txt) plus the ground-truth map
// checkpoint as scene.bin.
void write_tum_layout(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace splat
