#include "splat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "splat/dataset.hpp"
#include "splat/errors.hpp"
#include "splat/metrics.hpp"
#include "splat/parallel.hpp"
#include "splat/png_io.hpp"
#include "splat/synthetic.hpp"

namespace splat {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void write_metrics_file(const std::filesystem::path& path, const FinalMetrics& m) {
  std::ofstream out(path);
  out.precision(6);
  if (m.ate_rmse_cm)
    out << "ate_rmse_cm " << *m.ate_rmse_cm << "\n";
  else
    out << "ate_rmse_cm n/a\n";
  out << "psnr_db " << m.psnr_db << "\n"
      << "ssim " << m.ssim << "\n"
      << "depth_l1_cm " << m.depth_l1_cm << "\n"
      << "map_size " << m.map_size << "\n"
      << "runtime_s " << m.runtime_s << "\n"
      << "scene_extent_m " << m.scene_extent << "\n";
}

}  // namespace

double auto_scene_extent(const FrameObservation& frame) {
  std::vector<double> depths;
  depths.reserve(frame.depth.data.size());
  for (const double d : frame.depth.data)
    if (d > 0.0) depths.push_back(d);
  if (depths.empty()) return 3.0;
  std::sort(depths.begin(), depths.end());
  const double p95 = depths[static_cast<std::size_t>(0.95 * (depths.size() - 1))];
  return std::clamp(2.0 * p95, 1.0, 50.0);
}

FinalMetrics evaluate_map_on_frames(const GaussianMap& map, const Trajectory& poses,
                                    const std::vector<FrameObservation>& frames,
                                    const CameraIntrinsics& K, const RenderSettings& settings) {
  if (poses.size() != frames.size() || frames.empty())
    throw EvalError("evaluate: trajectory and frame counts differ");

  FinalMetrics metrics;
  metrics.map_size = map.size();
  double psnr_sum = 0.0, ssim_sum = 0.0, depth_sum = 0.0;
  std::size_t depth_count = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const RenderOutput out = render(map, poses.poses[i], K, settings);
    psnr_sum += psnr_db(out.color, frames[i].rgb);
    ssim_sum += ssim(out.color, frames[i].rgb).value;
    for (std::size_t p = 0; p < out.depth.data.size(); ++p) {
      const double a = out.depth.data[p], b = frames[i].depth.data[p];
      if (a > 0.0 && b > 0.0) {
        depth_sum += std::abs(a - b);
        ++depth_count;
      }
    }
  }
  metrics.psnr_db = psnr_sum / static_cast<double>(frames.size());
  metrics.ssim = ssim_sum / static_cast<double>(frames.size());
  metrics.depth_l1_cm = depth_count > 0 ? depth_sum / static_cast<double>(depth_count) * 100.0 : 0.0;
  return metrics;
}

void dump_debug_render(const GaussianMap& map, const CameraPose& pose, const CameraIntrinsics& K,
                       const RenderSettings& settings, const std::filesystem::path& dir,
                       const std::string& stem) {
  const RenderOutput out = render(map, pose, K, settings);
  Image<std::uint8_t> rgb8(K.width, K.height, 3);
  for (std::size_t i = 0; i < out.color.data.size(); ++i)
    rgb8.data[i] =
        static_cast<std::uint8_t>(std::lround(std::clamp(out.color.data[i], 0.0, 1.0) * 255.0));
  write_png_rgb8(dir / (stem + "_color.png"), rgb8);

  Image<std::uint16_t> depth16(K.width, K.height, 1);
  for (std::size_t i = 0; i < out.depth.data.size(); ++i)
    depth16.data[i] =
        static_cast<std::uint16_t>(std::clamp(out.depth.data[i] * 5000.0, 0.0, 65535.0));
  write_png_gray16(dir / (stem + "_depth.png"), depth16);

  Image<std::uint8_t> opa8(K.width, K.height, 3);
  for (int y = 0; y < K.height; ++y)
    for (int x = 0; x < K.width; ++x) {
      const auto v = static_cast<std::uint8_t>(
          std::lround(std::clamp(out.opacity.at(y, x), 0.0, 1.0) * 255.0));
      opa8.at(y, x, 0) = opa8.at(y, x, 1) = opa8.at(y, x, 2) = v;
    }
  write_png_rgb8(dir / (stem + "_opacity.png"), opa8);
}

SlamResult run_slam_on_frames(const std::vector<FrameObservation>& frames,
                              const CameraIntrinsics& K, const Trajectory* ground_truth,
                              const RunConfig& config) {
  if (frames.empty()) throw DatasetError("run: no frames to process");
  config.validate();
  const auto t_start = Clock::now();

  RenderSettings settings = config.render;
  settings.threads = resolve_thread_count(config.threads);

  SlamResult result;
  result.intrinsics = K;
  const double scene_extent =
      config.scene_extent > 0.0 ? config.scene_extent : auto_scene_extent(frames.front());

  const bool have_gt = ground_truth && ground_truth->size() >= frames.size();

  namespace fs = std::filesystem;
  const bool write_outputs = !config.output.directory.empty();
  fs::path out_dir(config.output.directory);
  std::ofstream frame_csv;
  if (write_outputs) {
    fs::create_directories(out_dir);
    frame_csv.open(out_dir / "frames.csv");
    frame_csv << "index,timestamp,track_iters,track_initial_loss,track_final_loss,"
                 "track_converged,gaussians_added,map_size,map_final_loss,psnr_db,"
                 "adam_skipped,track_ms,map_ms\n";
  }

  MapOptimizer optimizer(config.mapping.learning_rates);
  TrackerState tracker_state;

  for (std::size_t k = 0; k < frames.size(); ++k) {
    const FrameObservation& frame = frames[k];
    FrameReport report;
    report.index = frame.index;
    report.timestamp = frame.timestamp;

    CameraPose pose;
    if (k == 0) {
      pose = have_gt ? ground_truth->poses[0] : CameraPose::identity();
      tracker_state.push(pose);
    } else {
      const auto t0 = Clock::now();
      pose = track_frame(result.map, frame, tracker_state, K, config.tracking, settings,
                         &report.track);
      report.track_ms = ms_since(t0);
    }

    const auto t1 = Clock::now();
    report.map = map_frame(result.map, optimizer, frame, pose, K, config.mapping, settings,
                           scene_extent, k == 0);
    report.map_ms = ms_since(t1);

    result.estimated.push(frame.timestamp, pose);
    result.reports.push_back(report);

    if (write_outputs) {
      frame_csv << report.index << ',' << report.timestamp << ',' << report.track.iterations_used
                << ',' << report.track.initial_loss << ',' << report.track.final_loss << ','
                << (report.track.converged ? 1 : 0) << ',' << report.map.gaussians_added << ','
                << report.map.map_size << ',' << report.map.final_loss << ',' << report.map.psnr_db
                << ',' << report.map.adam_skipped << ',' << report.track_ms << ','
                << report.map_ms << '\n';
      frame_csv.flush();
      if (config.output.checkpoint_every > 0 &&
          (k + 1) % static_cast<std::size_t>(config.output.checkpoint_every) == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "map_%06zu.bin", k);
        result.map.save_checkpoint(out_dir / name);
      }
      if (config.output.render_every > 0 &&
          k % static_cast<std::size_t>(config.output.render_every) == 0) {
        char stem[64];
        std::snprintf(stem, sizeof stem, "frame_%06zu", k);
        dump_debug_render(result.map, pose, K, settings, out_dir, stem);
      }
    }
  }

  result.metrics = evaluate_map_on_frames(result.map, result.estimated, frames, K, settings);
  result.metrics.scene_extent = scene_extent;
  if (have_gt && frames.size() >= 3) {
    Trajectory gt_matched;
    for (std::size_t k = 0; k < frames.size(); ++k)
      gt_matched.push(ground_truth->timestamps[k], ground_truth->poses[k]);
    result.metrics.ate_rmse_cm = ate_rmse(result.estimated, gt_matched, true).rmse_cm;
  }
  result.metrics.runtime_s = ms_since(t_start) / 1000.0;

  if (write_outputs) {
    save_tum_trajectory(out_dir / "trajectory.txt", result.estimated);
    result.map.save_checkpoint(out_dir / "map.bin");
    write_metrics_file(out_dir / "metrics.txt", result.metrics);
    if (config.output.point_cloud) result.map.export_point_cloud(out_dir / "map.ply");
  }
  return result;
}

SlamResult run_slam(const RunConfig& config) {
  config.validate();
  if (config.dataset.type == "synthetic") {
    SyntheticSpec spec = config.synthetic;
    const SyntheticDataset data = generate_synthetic(spec);
    std::vector<FrameObservation> frames = data.frames;
    if (config.dataset.max_frames > 0 &&
        frames.size() > static_cast<std::size_t>(config.dataset.max_frames))
      frames.resize(config.dataset.max_frames);
    Trajectory gt;
    for (std::size_t i = 0; i < frames.size(); ++i)
      gt.push(data.trajectory.timestamps[i], data.trajectory.poses[i]);
    return run_slam_on_frames(frames, data.intrinsics, &gt, config);
  }

  if (config.dataset.path.empty()) throw ConfigError("config: dataset.path is required");
  TumLoadOptions options;
  options.max_frames = config.dataset.max_frames;
  options.downscale = config.dataset.downscale;
  const LoadedDataset data = load_tum_rgbd(config.dataset.path, options);
  return run_slam_on_frames(data.frames, data.intrinsics,
                            data.has_ground_truth ? &data.ground_truth : nullptr, config);
}

}  // namespace splat
