#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "splat/config.hpp"
#include "splat/dataset.hpp"
#include "splat/errors.hpp"
#include "splat/metrics.hpp"
#include "splat/parallel.hpp"
#include "splat/pipeline.hpp"
#include "splat/synthetic.hpp"

namespace {

// Exit codes: 0 success, 2 config/usage, 3 dataset, 4 runtime.
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitRuntime = 4;

struct CommonFlags {
  std::string config_path;
  std::string dataset;
  std::string output;
  std::int64_t seed = -1;
  int max_frames = -1;
  int downscale = -1;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (defaults when omitted)");
  cmd->add_option("--dataset", flags.dataset, "dataset directory (TUM layout)");
  cmd->add_option("--output", flags.output, "output directory");
  cmd->add_option("--seed", flags.seed, "random seed override");
  cmd->add_option("--max-frames", flags.max_frames, "limit processed frames");
  cmd->add_option("--downscale", flags.downscale, "integer resolution divisor");
}

splat::RunConfig make_config(const CommonFlags& flags) {
  splat::RunConfig config;
  if (!flags.config_path.empty()) config = splat::RunConfig::load(flags.config_path);
  if (!flags.dataset.empty()) {
    config.dataset.path = flags.dataset;
    config.dataset.type = "tum";
  }
  if (!flags.output.empty()) config.output.directory = flags.output;
  if (flags.seed >= 0) {
    config.seed = static_cast<std::uint64_t>(flags.seed);
    config.synthetic.seed = config.seed;
  }
  if (flags.max_frames >= 0) config.dataset.max_frames = flags.max_frames;
  if (flags.downscale >= 1) config.dataset.downscale = flags.downscale;
  config.validate();
  return config;
}

int run_command(const CommonFlags& flags) {
  const splat::RunConfig config = make_config(flags);
  const splat::SlamResult result = splat::run_slam(config);
  std::cout << "frames " << result.reports.size() << "\n"
            << "map_size " << result.metrics.map_size << "\n"
            << "psnr_db " << result.metrics.psnr_db << "\n"
            << "ssim " << result.metrics.ssim << "\n"
            << "depth_l1_cm " << result.metrics.depth_l1_cm << "\n";
  if (result.metrics.ate_rmse_cm)
    std::cout << "ate_rmse_cm " << *result.metrics.ate_rmse_cm << "\n";
  std::cout << "runtime_s " << result.metrics.runtime_s << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-splatting RGBD SLAM"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* cmd_run = app.add_subcommand("run", "run SLAM on a dataset");
  add_common_flags(cmd_run, flags);

  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic TUM-layout dataset");
  add_common_flags(cmd_synth, flags);
  int synth_frames = -1, synth_width = -1, synth_height = -1;
  std::string synth_trajectory;
  cmd_synth->add_option("--frames", synth_frames, "frame count");
  cmd_synth->add_option("--width", synth_width, "image width");
  cmd_synth->add_option("--height", synth_height, "image height");
  cmd_synth->add_option("--trajectory", synth_trajectory, "sweep | pan");

  auto* cmd_eval = app.add_subcommand("eval", "metrics for saved outputs");
  add_common_flags(cmd_eval, flags);
  std::string eval_traj, eval_checkpoint;
  cmd_eval->add_option("--trajectory", eval_traj, "estimated trajectory (TUM text format)")
      ->required();
  cmd_eval->add_option("--checkpoint", eval_checkpoint, "map checkpoint (.bin)")->required();

  auto* cmd_render = app.add_subcommand("render", "render views from a checkpoint");
  add_common_flags(cmd_render, flags);
  std::string render_checkpoint, render_traj;
  int render_index = -1;
  double rfx = 64, rfy = 64, rcx = 32, rcy = 32;
  int rw = 64, rh = 64;
  cmd_render->add_option("--checkpoint", render_checkpoint, "map checkpoint (.bin)")->required();
  cmd_render->add_option("--trajectory", render_traj, "poses to render (TUM text format)")
      ->required();
  cmd_render->add_option("--index", render_index, "render only this pose index");
  cmd_render->add_option("--fx", rfx);
  cmd_render->add_option("--fy", rfy);
  cmd_render->add_option("--cx", rcx);
  cmd_render->add_option("--cy", rcy);
  cmd_render->add_option("--width", rw);
  cmd_render->add_option("--height", rh);

  auto* cmd_print = app.add_subcommand("print-config", "print the full default config as JSON");
  add_common_flags(cmd_print, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (cmd_print->parsed()) {
      const splat::RunConfig config =
          flags.config_path.empty() ? splat::RunConfig{} : splat::RunConfig::load(flags.config_path);
      std::cout << config.to_json_string();
      return 0;
    }

    if (cmd_run->parsed()) return run_command(flags);

    if (cmd_synth->parsed()) {
      splat::RunConfig config;
      if (!flags.config_path.empty()) config = splat::RunConfig::load(flags.config_path);
      if (flags.seed >= 0) config.synthetic.seed = static_cast<std::uint64_t>(flags.seed);
      if (synth_frames > 0) config.synthetic.frames = synth_frames;
      if (synth_width > 0) config.synthetic.width = synth_width;
      if (synth_height > 0) config.synthetic.height = synth_height;
      if (!synth_trajectory.empty()) config.synthetic.trajectory = synth_trajectory;
      config.validate();
      if (flags.output.empty()) throw splat::ConfigError("synth: --output is required");
      const splat::SyntheticDataset data = splat::generate_synthetic(config.synthetic);
      splat::write_tum_layout(data, flags.output);
      std::cout << "wrote " << data.frames.size() << " frames, " << data.map.size()
                << " scene Gaussians to " << flags.output << std::endl;
      return 0;
    }

    if (cmd_eval->parsed()) {
      splat::RunConfig config = make_config(flags);
      if (config.dataset.path.empty()) throw splat::ConfigError("eval: --dataset is required");
      splat::TumLoadOptions options;
      options.max_frames = config.dataset.max_frames;
      options.downscale = config.dataset.downscale;
      const splat::LoadedDataset data = splat::load_tum_rgbd(config.dataset.path, options);
      const splat::Trajectory est = splat::load_tum_trajectory(eval_traj);
      const splat::GaussianMap map = splat::GaussianMap::load_checkpoint(eval_checkpoint);

      // Pair estimated poses with frames by timestamp.
      std::vector<splat::FrameObservation> frames;
      splat::Trajectory poses;
      for (std::size_t i = 0; i < est.size(); ++i) {
        for (const auto& frame : data.frames) {
          if (std::abs(frame.timestamp - est.timestamps[i]) <= 0.02) {
            frames.push_back(frame);
            poses.push(est.timestamps[i], est.poses[i]);
            break;
          }
        }
      }
      if (frames.empty()) throw splat::EvalError("eval: no frames match the trajectory");

      splat::RenderSettings settings = config.render;
      settings.threads = splat::resolve_thread_count(config.threads);
      splat::FinalMetrics metrics =
          splat::evaluate_map_on_frames(map, poses, frames, data.intrinsics, settings);
      if (data.has_ground_truth)
        metrics.ate_rmse_cm = splat::ate_rmse(est, data.ground_truth, true).rmse_cm;

      std::cout << "frames " << frames.size() << "\npsnr_db " << metrics.psnr_db << "\nssim "
                << metrics.ssim << "\ndepth_l1_cm " << metrics.depth_l1_cm << "\n";
      if (metrics.ate_rmse_cm) std::cout << "ate_rmse_cm " << *metrics.ate_rmse_cm << "\n";
      return 0;
    }

    if (cmd_render->parsed()) {
      if (flags.output.empty()) throw splat::ConfigError("render: --output is required");
      const splat::GaussianMap map = splat::GaussianMap::load_checkpoint(render_checkpoint);
      const splat::Trajectory traj = splat::load_tum_trajectory(render_traj);
      splat::CameraIntrinsics K;
      K.fx = rfx;
      K.fy = rfy;
      K.cx = rcx;
      K.cy = rcy;
      K.width = rw;
      K.height = rh;
      K.validate();
      splat::RenderSettings settings;
      settings.threads = splat::resolve_thread_count(0);
      std::filesystem::create_directories(flags.output);
      char stem[64];
      for (std::size_t i = 0; i < traj.size(); ++i) {
        if (render_index >= 0 && static_cast<std::size_t>(render_index) != i) continue;
        std::snprintf(stem, sizeof stem, "view_%06zu", i);
        splat::dump_debug_render(map, traj.poses[i], K, settings, flags.output, stem);
      }
      std::cout << "rendered to " << flags.output << std::endl;
      return 0;
    }
  } catch (const splat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const splat::DatasetError& e) {
    std::cerr << "dataset error: " << e.what() << std::endl;
    return kExitDataset;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitRuntime;
  }
  return kExitConfig;
}
