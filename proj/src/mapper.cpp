#include "splat/mapper.hpp"

#include <cmath>

#include "splat/errors.hpp"
#include "splat/metrics.hpp"

namespace splat {

DensifyMask densify_mask(const RenderOutput& render, const FrameObservation& frame,
                         const DensifyThresholds& thr, bool error_densification) {
  require_same_shape(render.color, frame.rgb, "densify_mask");
  require_same_shape(render.depth, frame.depth, "densify_mask");

  const int w = frame.rgb.width, h = frame.rgb.height;
  DensifyMask out;
  out.mask = MaskImage::zeros(w, h, 1);
  out.reason = Image<std::uint8_t>::zeros(w, h, 1);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      DensifyReason reason = DensifyReason::none;
      if (render.opacity.at(y, x) < thr.tau_opa) {
        reason = DensifyReason::hole;
      } else if (error_densification) {
        double color_err = 0.0;
        for (int c = 0; c < 3; ++c)
          color_err = std::max(color_err, std::abs(render.color.at(y, x, c) - frame.rgb.at(y, x, c)));
        if (color_err > thr.tau_color) {
          reason = DensifyReason::color_error;
        } else {
          const double d = frame.depth.at(y, x);
          if (d > 0.0 && std::abs(render.depth.at(y, x) - d) / d > thr.tau_depth)
            reason = DensifyReason::depth_error;
        }
      }
      if (reason != DensifyReason::none) {
        out.mask.at(y, x) = 1;
        out.reason.at(y, x) = static_cast<std::uint8_t>(reason);
        ++out.count;
      }
    }
  }
  return out;
}

std::vector<GaussianSeed> seed_from_depth(const DensifyMask& mask, const FrameObservation& frame,
                                          const CameraPose& pose, const CameraIntrinsics& K,
                                          int stride, double initial_opacity) {
  if (stride < 1) throw InvalidInputError("seed_from_depth: stride must be >= 1");
  const Eigen::Matrix3d cam_to_world = pose.rotation();
  std::vector<GaussianSeed> seeds;
  for (int y = 0; y < frame.depth.height; y += stride) {
    for (int x = 0; x < frame.depth.width; x += stride) {
      if (!mask.mask.at(y, x)) continue;
      const double d = frame.depth.at(y, x);
      if (!(d > 0.0)) continue;
      const Eigen::Vector3d p_cam((x - K.cx) / K.fx * d, (y - K.cy) / K.fy * d, d);
      GaussianSeed s;
      s.position = cam_to_world * p_cam + pose.t;
      s.color = {frame.rgb.at(y, x, 0), frame.rgb.at(y, x, 1), frame.rgb.at(y, x, 2)};
      s.scale = Eigen::Vector3d::Constant(d * stride / K.fx);
      s.rotation = Quat::identity();
      s.opacity = initial_opacity;
      seeds.push_back(s);
    }
  }
  return seeds;
}

MapFrameReport map_frame(GaussianMap& map, MapOptimizer& optimizer, const FrameObservation& frame,
                         const CameraPose& pose, const CameraIntrinsics& K,
                         const MappingConfig& config, const RenderSettings& render_settings,
                         double scene_extent, bool first_frame) {
  MapFrameReport report;

  RenderOutput pre = render(map, pose, K, render_settings);
  const DensifyMask mask = densify_mask(pre, frame, config.thresholds, config.error_densification);
  const int stride = first_frame ? config.first_frame_stride : config.seed_stride;
  const auto seeds = seed_from_depth(mask, frame, pose, K, stride, config.initial_opacity);
  map.insert_gaussians(seeds);
  report.gaussians_added = static_cast<int>(seeds.size());
  report.map_size = map.size();

  map.snapshot_anchors(pose);

  const int iterations =
      config.iterations * (first_frame ? config.first_frame_iteration_factor : 1);
  report.iterations = iterations;

  // Mapping-loss gradients of the final iteration, kept for the importance
  // update (regularization gradients are excluded on purpose).
  std::vector<std::size_t> last_touched;
  std::vector<ImportanceSample> last_samples;

  for (int it = 0; it < iterations; ++it) {
    RenderOutput out = render(map, pose, K, render_settings);
    const ImageLossResult loss = mapping_loss(out, frame, config.loss_weights);
    RenderGradients rg = render_backward(map, pose, K, out, loss.d_color, loss.d_depth, false);
    const std::vector<std::size_t> touched = out.touched();

    if (it + 1 == iterations) {
      last_touched = touched;
      last_samples.clear();
      last_samples.reserve(touched.size());
      for (const std::size_t i : touched)
        last_samples.push_back({rg.scale[i], rg.color[i], rg.depth[i]});
    }

    double total_loss = loss.value;
    MapGradients grads = MapGradients::from_render(std::move(rg));
    if (config.regularization) {
      const RegularizationResult reg = regularization_loss(map, touched, pose);
      total_loss += reg.value;
      grads.add_regularization(reg);
    }
    report.adam_skipped += optimizer.apply(map, grads, scene_extent);
    report.final_loss = total_loss;
  }

  if (!last_touched.empty()) map.update_importance(last_touched, last_samples);

  const RenderOutput final_render = render(map, pose, K, render_settings);
  report.psnr_db = psnr_db(final_render.color, frame.rgb);
  return report;
}

}  // namespace splat
