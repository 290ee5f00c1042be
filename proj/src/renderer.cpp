#include "splat/renderer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "splat/errors.hpp"
#include "splat/parallel.hpp"

namespace splat {

CompositedPixel composite_pixel(std::span<const PixelSample> ordered, double transmittance_min) {
  CompositedPixel out;
  double transmittance = 1.0;
  [[maybe_unused]] double prev_depth = -std::numeric_limits<double>::infinity();
  for (const auto& s : ordered) {
    assert(s.alpha >= 0.0 && s.alpha < 1.0);
    assert(s.depth >= prev_depth && "composite_pixel expects ascending depth");
    prev_depth = s.depth;
    const double w = s.alpha * transmittance;
    out.color += s.color * w;
    out.depth += s.depth * w;
    out.opacity += w;
    transmittance *= 1.0 - s.alpha;
    if (transmittance < transmittance_min) break;
  }
  return out;
}

namespace {

struct Conic {
  double a, b, c;
};

inline Conic conic_of(const Eigen::Matrix2d& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  const double inv_det = 1.0 / det;
  return {cov(1, 1) * inv_det, -cov(0, 1) * inv_det, cov(0, 0) * inv_det};
}

inline double alpha_from_conic(double dx, double dy, const Conic& A, double opacity,
                               double radius_px, double alpha_max) {
  if (dx * dx + dy * dy > radius_px * radius_px) return 0.0;
  const double sigma = 0.5 * (A.a * dx * dx + A.c * dy * dy) + A.b * dx * dy;
  const double alpha = opacity * std::exp(-sigma);
  return std::min(alpha, alpha_max);
}

}  // namespace

double eval_alpha(const Projected2DGaussian& g, double opacity, const Eigen::Vector2d& x,
                  double alpha_max) {
  const Conic A = conic_of(g.cov_px);
  return alpha_from_conic(x.x() - g.mean_px.x(), x.y() - g.mean_px.y(), A, opacity, g.radius_px,
                          alpha_max);
}

std::vector<std::int32_t> sort_by_depth(std::span<const double> depths) {
  std::vector<std::int32_t> order(depths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::int32_t a, std::int32_t b) { return depths[a] < depths[b]; });
  return order;
}

std::vector<std::size_t> RenderOutput::touched(double min_weight) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gaussian_weights.size(); ++i)
    if (gaussian_weights[i] > min_weight) idx.push_back(i);
  return idx;
}

namespace {

// Shared by render() and render_backward(): projection + depth sort + tile bins.
struct FrameLayout {
  std::vector<RenderOutput::ProjectedEntry> projected;  // depth-sorted
  std::vector<std::vector<std::int32_t>> bins;          // per tile, depth-ordered
  int tiles_x = 0, tiles_y = 0;
};

FrameLayout build_layout(const GaussianMap& map, const CameraPose& pose,
                         const CameraIntrinsics& K, const RenderSettings& settings) {
  K.validate();
  FrameLayout layout;

  std::vector<RenderOutput::ProjectedEntry> retained;
  retained.reserve(map.size());
  std::vector<double> depths;
  depths.reserve(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussian(i);
    const auto proj = project_gaussian(g.position, g.scale(), g.rotation, pose, K);
    if (!proj) continue;
    RenderOutput::ProjectedEntry e;
    e.map_index = static_cast<std::int32_t>(i);
    e.mean_px = proj->mean_px;
    const Conic A = conic_of(proj->cov_px);
    e.conic_a = A.a;
    e.conic_b = A.b;
    e.conic_c = A.c;
    e.depth = proj->depth;
    e.radius_px = proj->radius_px;
    e.color = g.color;
    e.opacity = g.opacity();
    retained.push_back(e);
    depths.push_back(proj->depth);
  }

  const auto order = sort_by_depth(depths);
  layout.projected.reserve(retained.size());
  for (const auto idx : order) layout.projected.push_back(retained[idx]);

  const int ts = settings.tile_size;
  layout.tiles_x = (K.width + ts - 1) / ts;
  layout.tiles_y = (K.height + ts - 1) / ts;
  layout.bins.assign(static_cast<std::size_t>(layout.tiles_x) * layout.tiles_y, {});
  for (std::size_t p = 0; p < layout.projected.size(); ++p) {
    const auto& e = layout.projected[p];
    const int tx0 = std::max(0, static_cast<int>(std::floor((e.mean_px.x() - e.radius_px) / ts)));
    const int tx1 = std::min(layout.tiles_x - 1,
                             static_cast<int>(std::floor((e.mean_px.x() + e.radius_px) / ts)));
    const int ty0 = std::max(0, static_cast<int>(std::floor((e.mean_px.y() - e.radius_px) / ts)));
    const int ty1 = std::min(layout.tiles_y - 1,
                             static_cast<int>(std::floor((e.mean_px.y() + e.radius_px) / ts)));
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        layout.bins[static_cast<std::size_t>(ty) * layout.tiles_x + tx].push_back(
            static_cast<std::int32_t>(p));
  }
  return layout;
}

}  // namespace

RenderOutput render(const GaussianMap& map, const CameraPose& pose, const CameraIntrinsics& K,
                    const RenderSettings& settings) {
  FrameLayout layout = build_layout(map, pose, K, settings);

  RenderOutput out;
  out.color = ImageD::zeros(K.width, K.height, 3);
  out.depth = ImageD::zeros(K.width, K.height, 1);
  out.opacity = ImageD::zeros(K.width, K.height, 1);
  out.contrib_count = Image<std::int32_t>::zeros(K.width, K.height, 1);
  out.gaussian_weights.assign(map.size(), 0.0);
  out.aux.final_transmittance = ImageD(K.width, K.height, 1, 1.0);
  out.aux.settings = settings;
  out.aux.projected = layout.projected;

  const int ts = settings.tile_size;
  const int n_tiles = layout.tiles_x * layout.tiles_y;
  out.aux.tiles.resize(n_tiles);

  const int threads = std::max(1, settings.threads);
  std::vector<std::vector<double>> weight_partials(static_cast<std::size_t>(threads));

  parallel_chunks(n_tiles, threads, [&](int begin, int end, int worker) {
    auto& weights = weight_partials[worker];
    weights.assign(layout.projected.size(), 0.0);
    for (int tile_idx = begin; tile_idx < end; ++tile_idx) {
      const int tx = tile_idx % layout.tiles_x;
      const int ty = tile_idx / layout.tiles_x;
      auto& tile = out.aux.tiles[tile_idx];
      tile.x0 = tx * ts;
      tile.y0 = ty * ts;
      tile.x1 = std::min(tile.x0 + ts, K.width);
      tile.y1 = std::min(tile.y0 + ts, K.height);
      const auto& bin = layout.bins[tile_idx];
      const int tile_pixels = (tile.x1 - tile.x0) * (tile.y1 - tile.y0);
      tile.offsets.assign(tile_pixels, 0);
      tile.counts.assign(tile_pixels, 0);
      tile.entries.clear();

      int pix = 0;
      for (int y = tile.y0; y < tile.y1; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x, ++pix) {
          tile.offsets[pix] = static_cast<std::int32_t>(tile.entries.size());
          double transmittance = 1.0;
          Eigen::Vector3d color = Eigen::Vector3d::Zero();
          double depth = 0.0, opacity_acc = 0.0;
          int count = 0;
          for (const auto p : bin) {
            const auto& e = layout.projected[p];
            const double alpha =
                alpha_from_conic(x - e.mean_px.x(), y - e.mean_px.y(),
                                 {e.conic_a, e.conic_b, e.conic_c}, e.opacity, e.radius_px,
                                 settings.alpha_max);
            if (alpha <= 0.0) continue;
            const double w = alpha * transmittance;
            color += e.color * w;
            depth += e.depth * w;
            opacity_acc += w;
            weights[p] += w;
            tile.entries.push_back(p);
            ++count;
            transmittance *= 1.0 - alpha;
            if (transmittance < settings.transmittance_min) break;
          }
          tile.counts[pix] = count;
          out.color.at(y, x, 0) = color.x();
          out.color.at(y, x, 1) = color.y();
          out.color.at(y, x, 2) = color.z();
          out.depth.at(y, x) = depth;
          out.opacity.at(y, x) = opacity_acc;
          out.contrib_count.at(y, x) = count;
          out.aux.final_transmittance.at(y, x) = transmittance;
        }
      }
    }
  });

  for (const auto& weights : weight_partials) {
    if (weights.empty()) continue;
    for (std::size_t p = 0; p < weights.size(); ++p)
      out.gaussian_weights[layout.projected[p].map_index] += weights[p];
  }
  return out;
}

namespace {

// Per-projected-Gaussian accumulators from the pixel pass.
struct PixelPassGrad {
  Eigen::Vector3d d_color = Eigen::Vector3d::Zero();
  double d_opacity = 0.0;
  Eigen::Vector2d d_mean_px = Eigen::Vector2d::Zero();
  double d_cov_xx = 0.0, d_cov_xy = 0.0, d_cov_yy = 0.0;  // symmetric upstream
  double d_depth = 0.0;
};

}  // namespace

RenderGradients render_backward(const GaussianMap& map, const CameraPose& pose,
                                const CameraIntrinsics& K, const RenderOutput& fwd,
                                const ImageD& d_color, const ImageD& d_depth,
                                bool want_pose_grads) {
  if (d_color.width != K.width || d_color.height != K.height || d_color.channels != 3 ||
      d_depth.width != K.width || d_depth.height != K.height || d_depth.channels != 1)
    throw InvalidInputError("render_backward: gradient image dimensions mismatch");
  if (fwd.color.width != K.width || fwd.color.height != K.height)
    throw InvalidInputError("render_backward: forward buffers do not match intrinsics");
  if (fwd.gaussian_weights.size() != map.size())
    throw InvalidInputError("render_backward: forward buffers do not match map");

  const auto& settings = fwd.aux.settings;
  const auto& projected = fwd.aux.projected;
  const int n_tiles = static_cast<int>(fwd.aux.tiles.size());
  const int threads = std::max(1, settings.threads);

  std::vector<std::vector<PixelPassGrad>> partials(static_cast<std::size_t>(threads));

  parallel_chunks(n_tiles, threads, [&](int begin, int end, int worker) {
    auto& acc = partials[worker];
    acc.assign(projected.size(), {});
    for (int tile_idx = begin; tile_idx < end; ++tile_idx) {
      const auto& tile = fwd.aux.tiles[tile_idx];
      int pix = 0;
      for (int y = tile.y0; y < tile.y1; ++y) {
        for (int x = tile.x0; x < tile.x1; ++x, ++pix) {
          const int count = tile.counts[pix];
          if (count == 0) continue;
          const std::int32_t off = tile.offsets[pix];
          const Eigen::Vector3d gC(d_color.at(y, x, 0), d_color.at(y, x, 1), d_color.at(y, x, 2));
          const double gD = d_depth.at(y, x);
          if (gC.isZero(0.0) && gD == 0.0) continue;

          double next_T = fwd.aux.final_transmittance.at(y, x);
          Eigen::Vector3d suffix_color = Eigen::Vector3d::Zero();  // sum_{j>i} c_j a_j T_j
          double suffix_depth = 0.0;
          for (int k = count - 1; k >= 0; --k) {
            const std::int32_t p = tile.entries[off + k];
            const auto& e = projected[p];
            // Identical arithmetic to the forward pass, so T replays exactly.
            const double alpha =
                alpha_from_conic(x - e.mean_px.x(), y - e.mean_px.y(),
                                 {e.conic_a, e.conic_b, e.conic_c}, e.opacity, e.radius_px,
                                 settings.alpha_max);
            const double T = next_T / (1.0 - alpha);
            const double w = alpha * T;
            auto& a = acc[p];

            a.d_color += w * gC;
            a.d_depth += w * gD;

            const double d_alpha = T * (e.color.dot(gC) + e.depth * gD) -
                                   (suffix_color.dot(gC) + suffix_depth * gD) / (1.0 - alpha);

            // alpha = min(opacity * exp(-sigma), alpha_max); zero slope on the clamp.
            if (alpha < settings.alpha_max) {
              const double dx = x - e.mean_px.x();
              const double dy = y - e.mean_px.y();
              a.d_opacity += d_alpha * (alpha / e.opacity);  // exp(-sigma)
              const double d_sigma = -alpha * d_alpha;
              // sigma = 0.5 d^T A d with d = pixel - mean.
              const double Adx = e.conic_a * dx + e.conic_b * dy;
              const double Ady = e.conic_b * dx + e.conic_c * dy;
              a.d_mean_px.x() += -d_sigma * Adx;
              a.d_mean_px.y() += -d_sigma * Ady;
              // dL/dSigma' = -0.5 * dL/dsigma * (A d)(A d)^T
              a.d_cov_xx += -0.5 * d_sigma * Adx * Adx;
              a.d_cov_xy += -0.5 * d_sigma * Adx * Ady;
              a.d_cov_yy += -0.5 * d_sigma * Ady * Ady;
            }

            suffix_color += e.color * w;
            suffix_depth += e.depth * w;
            next_T = T;
          }
        }
      }
    }
  });

  // Deterministic worker-order reduction.
  std::vector<PixelPassGrad> total(projected.size());
  for (const auto& acc : partials) {
    if (acc.empty()) continue;
    for (std::size_t p = 0; p < acc.size(); ++p) {
      total[p].d_color += acc[p].d_color;
      total[p].d_opacity += acc[p].d_opacity;
      total[p].d_mean_px += acc[p].d_mean_px;
      total[p].d_cov_xx += acc[p].d_cov_xx;
      total[p].d_cov_xy += acc[p].d_cov_xy;
      total[p].d_cov_yy += acc[p].d_cov_yy;
      total[p].d_depth += acc[p].d_depth;
    }
  }

  RenderGradients grads;
  grads.position.assign(map.size(), Eigen::Vector3d::Zero());
  grads.scale.assign(map.size(), Eigen::Vector3d::Zero());
  grads.rotation.assign(map.size(), Eigen::Vector4d::Zero());
  grads.color.assign(map.size(), Eigen::Vector3d::Zero());
  grads.opacity.assign(map.size(), 0.0);
  grads.depth.assign(map.size(), 0.0);
  grads.has_pose = want_pose_grads;

  const int n_proj = static_cast<int>(projected.size());
  std::vector<Eigen::Vector3d> pose_t_partials(partials.size(), Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector4d> pose_q_partials(partials.size(), Eigen::Vector4d::Zero());

  parallel_chunks(n_proj, threads, [&](int begin, int end, int worker) {
    for (int p = begin; p < end; ++p) {
      const auto& t = total[p];
      const auto& e = projected[p];
      const std::size_t mi = static_cast<std::size_t>(e.map_index);
      grads.color[mi] = t.d_color;
      grads.opacity[mi] = t.d_opacity;
      grads.depth[mi] = t.d_depth;

      const bool zero_upstream = t.d_mean_px.isZero(0.0) && t.d_cov_xx == 0.0 &&
                                 t.d_cov_xy == 0.0 && t.d_cov_yy == 0.0 && t.d_depth == 0.0;
      if (zero_upstream) continue;

      Eigen::Matrix2d d_cov;
      d_cov << t.d_cov_xx, t.d_cov_xy, t.d_cov_xy, t.d_cov_yy;
      const Gaussian& g = map.gaussian(mi);
      const auto pg = project_gaussian_backward(g.position, g.scale(), g.rotation, pose, K,
                                                t.d_mean_px, d_cov, t.d_depth, want_pose_grads);
      grads.position[mi] = pg.d_mean;
      grads.scale[mi] = pg.d_scale;
      grads.rotation[mi] = pg.d_rot;
      if (want_pose_grads) {
        pose_t_partials[worker] += pg.d_t;
        pose_q_partials[worker] += pg.d_q;
      }
    }
  });

  if (want_pose_grads) {
    for (std::size_t w = 0; w < partials.size(); ++w) {
      grads.d_translation += pose_t_partials[w];
      grads.d_rotation += pose_q_partials[w];
    }
  }
  return grads;
}

}  // namespace splat
