#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "splat/gaussian_map.hpp"
#include "splat/geometry.hpp"
#include "splat/losses.hpp"
#include "splat/renderer.hpp"

namespace splat {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Flat adaptive-moment state. One step() call advances the shared step counter;
// non-finite gradient elements are skipped and counted.
class AdamState {
 public:
  void ensure_size(std::size_t n);
  std::size_t size() const { return m_.size(); }
  std::int64_t steps() const { return step_; }

  int step(std::span<double> params, std::span<const double> grads, const AdamParams& p);

 private:
  std::vector<double> m_, v_;
  std::int64_t step_ = 0;
};

struct MapLearningRates {
  double position = 1.6e-4;  // multiplied by scene extent
  double scale = 5e-3;
  double rotation = 1e-3;
  double color = 2.5e-3;
  double opacity = 5e-2;
};

// Combined exposed-space per-Gaussian gradients going into one optimizer step.
struct MapGradients {
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector3d> scale;
  std::vector<Eigen::Vector4d> rotation;
  std::vector<Eigen::Vector3d> color;
  std::vector<double> opacity;

  explicit MapGradients(std::size_t n = 0) { resize(n); }
  void resize(std::size_t n);
  static MapGradients from_render(RenderGradients&& g);
  void add_regularization(const RegularizationResult& reg);
};

// Owns Adam state for the five Gaussian parameter classes; state persists as the
// map grows (new Gaussians start with zero moments). Steps run in the internal
// parametrization (log-scale, logit-opacity); quaternions are renormalized and
// colors clamped to [0,1] afterwards.
class MapOptimizer {
 public:
  explicit MapOptimizer(MapLearningRates rates = {}) : rates_(rates) {}

  // Returns count of parameter entries skipped due to non-finite gradients.
  int apply(GaussianMap& map, const MapGradients& grads, double scene_extent);

  const MapLearningRates& rates() const { return rates_; }

 private:
  MapLearningRates rates_;
  AdamState position_, scale_, rotation_, color_, opacity_;
};

struct PoseLearningRates {
  double translation = 2e-3;
  double rotation = 1e-3;
};

// Fresh per tracked frame. The quaternion gradient is projected onto the tangent
// of the unit sphere before the step and the quaternion renormalized after.
class PoseOptimizer {
 public:
  explicit PoseOptimizer(PoseLearningRates rates = {}) : rates_(rates) {}

  int apply(CameraPose& pose, const Eigen::Vector3d& d_t, const Eigen::Vector4d& d_q,
            double lr_scale = 1.0);

 private:
  PoseLearningRates rates_;
  AdamState t_state_, q_state_;
};

}  // namespace splat
