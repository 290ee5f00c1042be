#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "splat/gaussian_map.hpp"
#include "splat/geometry.hpp"
#include "splat/image.hpp"

namespace splat {

struct RenderSettings {
  int tile_size = 16;
  double alpha_max = 0.99;
  // Per-pixel traversal stops once transmittance drops below this; it bounds the
  // gap to the exhaustive compositor by the same amount.
  double transmittance_min = 1e-6;
  int threads = 1;
};

// Accumulated blend weight below which a Gaussian does not count as touched.
inline constexpr double kTouchedWeightMin = 1e-6;

struct PixelSample {
  double alpha = 0.0;
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
};

struct CompositedPixel {
  Eigen::Vector3d color = Eigen::Vector3d::Zero();
  double depth = 0.0;
  double opacity = 0.0;
};

// Front-to-back alpha blend of depth-ordered samples. Debug builds assert the
// ordering contract.
CompositedPixel composite_pixel(std::span<const PixelSample> ordered,
                                double transmittance_min = 1e-6);

// alpha = opacity * exp(-0.5 d^T cov^-1 d), truncated to zero outside the
// radius_px footprint and clamped to alpha_max.
double eval_alpha(const Projected2DGaussian& g, double opacity, const Eigen::Vector2d& x,
                  double alpha_max = 0.99);

// Stable ascending-depth permutation (ties keep original order).
std::vector<std::int32_t> sort_by_depth(std::span<const double> depths);

struct RenderOutput {
  ImageD color;                  // H x W x 3, [0,1]
  ImageD depth;                  // H x W, meters
  ImageD opacity;                // H x W, [0,1]
  Image<std::int32_t> contrib_count;    // Gaussians blended per pixel
  std::vector<double> gaussian_weights;  // per map Gaussian, accumulated alpha*T

  std::vector<std::size_t> touched(double min_weight = kTouchedWeightMin) const;

  // Buffers the backward pass replays; contents are internal to the renderer.
  struct ProjectedEntry {
    std::int32_t map_index = 0;
    Eigen::Vector2d mean_px = Eigen::Vector2d::Zero();
    double conic_a = 0, conic_b = 0, conic_c = 0;  // inverse 2D covariance
    double depth = 0;
    double radius_px = 0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double opacity = 0;
  };
  struct Tile {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    std::vector<std::int32_t> offsets;  // per pixel (row-major in tile), into entries
    std::vector<std::int32_t> counts;
    std::vector<std::int32_t> entries;  // indices into projected
  };
  struct Aux {
    std::vector<ProjectedEntry> projected;  // depth-sorted
    std::vector<Tile> tiles;
    ImageD final_transmittance;
    RenderSettings settings;
  };
  Aux aux;
};

// Forward render of color, depth and opacity in one traversal. Deterministic for
// fixed inputs and thread count.
RenderOutput render(const GaussianMap& map, const CameraPose& pose, const CameraIntrinsics& K,
                    const RenderSettings& settings = {});

struct RenderGradients {
  // Per-Gaussian gradients in exposed parameter space (positive scale, (0,1) opacity).
  std::vector<Eigen::Vector3d> position;
  std::vector<Eigen::Vector3d> scale;
  std::vector<Eigen::Vector4d> rotation;  // w,x,y,z
  std::vector<Eigen::Vector3d> color;
  std::vector<double> opacity;
  // Gradient w.r.t. the compositing depth z_i (the importance-weight depth signal).
  std::vector<double> depth;

  bool has_pose = false;
  Eigen::Vector3d d_translation = Eigen::Vector3d::Zero();
  Eigen::Vector4d d_rotation = Eigen::Vector4d::Zero();
};

// Analytic adjoint of render() for the given upstream image gradients. `fwd` must
// come from a render of the same map/pose/K.
RenderGradients render_backward(const GaussianMap& map, const CameraPose& pose,
                                const CameraIntrinsics& K, const RenderOutput& fwd,
                                const ImageD& d_color, const ImageD& d_depth,
                                bool want_pose_grads);

}  // namespace splat
