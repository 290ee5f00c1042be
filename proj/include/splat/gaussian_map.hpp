#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "splat/geometry.hpp"

namespace splat {

// One splat primitive. Scale is stored as log-scale and opacity as a pre-sigmoid
// logit so the optimizer can run unconstrained; accessors expose the positive
// scale and the (0,1) opacity the losses are written in.
struct Gaussian {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // meters
  Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
  Quat rotation = Quat::identity();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // RGB in [0,1]
  double opacity_logit = 0.0;

  Eigen::Vector3d scale() const { return log_scale.array().exp(); }
  double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
};

// Validated, exposed-value description of a new Gaussian.
struct GaussianSeed {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();  // > 0
  Quat rotation = Quat::identity();                 // unit
  Eigen::Vector3d color = Eigen::Vector3d::Zero();  // [0,1]
  double opacity = 0.5;                             // (0,1)
};

// Per-Gaussian seen count and absolute-gradient accumulators.
struct ImportanceState {
  std::int64_t seen_count = 0;
  Eigen::Vector3d grad_scale_sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad_color_sum = Eigen::Vector3d::Zero();
  double grad_depth_sum = 0.0;
};

// Parameter values captured at the start of a frame's optimization; the
// regularization loss anchors scale, color, and camera-space depth to these.
struct RegularizationAnchor {
  Eigen::Vector3d scale_ref = Eigen::Vector3d::Zero();
  Eigen::Vector3d color_ref = Eigen::Vector3d::Zero();
  double depth_ref = 0.0;
};

struct ImportanceWeights {
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
};

// Signed per-Gaussian gradient sample fed to update_importance; absolute values
// are accumulated.
struct ImportanceSample {
  Eigen::Vector3d scale = Eigen::Vector3d::Zero();
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t count() const { return end - begin; }
};

class GaussianMap {
 public:
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }

  Gaussian& gaussian(std::size_t i) { return gaussians_[i]; }
  const Gaussian& gaussian(std::size_t i) const { return gaussians_[i]; }
  const std::vector<Gaussian>& gaussians() const { return gaussians_; }

  const ImportanceState& importance(std::size_t i) const { return importance_[i]; }
  const RegularizationAnchor& anchor(std::size_t i) const { return anchors_[i]; }

  // Validates every seed (positive scale, unit rotation, color in [0,1],
  // opacity in (0,1), all finite) and appends. Importance starts at zero.
  IndexRange insert_gaussians(std::span<const GaussianSeed> seeds);

  // For each touched index: seen_count += 1, accumulators += |sample|.
  void update_importance(std::span<const std::size_t> touched,
                         std::span<const ImportanceSample> samples);

  // grad_sum / seen_count; zero for never-seen Gaussians.
  ImportanceWeights importance_weights(std::size_t i) const;

  // Capture current scale/color and camera-space depth of every Gaussian as the
  // regularization anchor for the frame about to be optimized.
  void snapshot_anchors(const CameraPose& pose);

  // Versioned little-endian binary checkpoint (see docs in gaussian_map.cpp).
  void save_checkpoint(const std::filesystem::path& path) const;
  static GaussianMap load_checkpoint(const std::filesystem::path& path);

  // ASCII PLY point cloud (positions + 8-bit colors) for external viewers.
  void export_point_cloud(const std::filesystem::path& path) const;

 private:
  std::vector<Gaussian> gaussians_;
  std::vector<ImportanceState> importance_;
  std::vector<RegularizationAnchor> anchors_;
};

double logit(double p);
double sigmoid(double v);

}  // namespace splat
