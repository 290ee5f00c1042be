#include "splat/config.hpp"

#include <fstream>

#include <json.hpp>

#include "splat/errors.hpp"

namespace splat {

namespace {

using nlohmann::json;

// Reads key into field if present, leaving the default otherwise.
template <typename T>
void get_if(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void check(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("config: ") + what);
}

}  // namespace

void RunConfig::validate() const {
  check(dataset.type == "tum" || dataset.type == "synthetic",
        "dataset.type must be \"tum\" or \"synthetic\"");
  check(dataset.max_frames >= 0, "dataset.max_frames must be >= 0");
  check(dataset.downscale >= 1, "dataset.downscale must be >= 1");
  check(threads >= 0, "threads must be >= 0");

  check(render.tile_size >= 4 && render.tile_size <= 128, "render.tile_size must be in [4,128]");
  check(render.alpha_max > 0.0 && render.alpha_max < 1.0, "render.alpha_max must be in (0,1)");
  check(render.transmittance_min > 0.0 && render.transmittance_min < 1.0,
        "render.transmittance_min must be in (0,1)");

  const auto& thr = mapping.thresholds;
  check(thr.tau_opa > 0.0 && thr.tau_opa < 1.0, "mapping.tau_opa must be in (0,1)");
  check(thr.tau_color > 0.0 && thr.tau_color <= 1.0, "mapping.tau_color must be in (0,1]");
  check(thr.tau_depth > 0.0, "mapping.tau_depth must be > 0");
  check(mapping.iterations >= 0, "mapping.iterations must be >= 0");
  check(mapping.first_frame_iteration_factor >= 1,
        "mapping.first_frame_iteration_factor must be >= 1");
  check(mapping.seed_stride >= 1 && mapping.first_frame_stride >= 1,
        "mapping strides must be >= 1");
  check(mapping.initial_opacity > 0.0 && mapping.initial_opacity < 1.0,
        "mapping.initial_opacity must be in (0,1)");
  const auto& lw = mapping.loss_weights;
  check(lw.lambda_color >= 0.0 && lw.lambda_depth >= 0.0 && lw.lambda_ssim >= 0.0 &&
            lw.lambda_color_track >= 0.0 && lw.lambda_depth_track >= 0.0,
        "loss weights must be >= 0");
  check(scene_extent >= 0.0, "scene_extent must be >= 0");

  check(tracking.iterations >= 0, "tracking.iterations must be >= 0");
  check(tracking.early_stop_window >= 1, "tracking.early_stop_window must be >= 1");
  check(tracking.early_stop_delta >= 0.0, "tracking.early_stop_delta must be >= 0");
  check(tracking.lr_decay > 0.0 && tracking.lr_decay <= 1.0,
        "tracking.lr_decay must be in (0,1]");

  check(output.checkpoint_every >= 0 && output.render_every >= 0,
        "output cadences must be >= 0");

  check(synthetic.frames >= 1, "synthetic.frames must be >= 1");
  check(synthetic.width >= 16 && synthetic.height >= 16, "synthetic resolution must be >= 16");
  check(synthetic.focal > 0.0, "synthetic.focal must be > 0");
}

std::string RunConfig::to_json_string() const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["dataset"] = {{"type", dataset.type},
                  {"path", dataset.path},
                  {"max_frames", dataset.max_frames},
                  {"downscale", dataset.downscale}};
  j["synthetic"] = {{"seed", synthetic.seed},
                    {"frames", synthetic.frames},
                    {"width", synthetic.width},
                    {"height", synthetic.height},
                    {"focal", synthetic.focal},
                    {"wall_depth", synthetic.wall_depth},
                    {"wall_spacing_px", synthetic.wall_spacing_px},
                    {"clutter", synthetic.clutter},
                    {"floor", synthetic.floor},
                    {"trajectory", synthetic.trajectory},
                    {"travel", synthetic.travel},
                    {"yaw_half_deg", synthetic.yaw_half_deg},
                    {"fps", synthetic.fps}};
  j["render"] = {{"tile_size", render.tile_size},
                 {"alpha_max", render.alpha_max},
                 {"transmittance_min", render.transmittance_min}};
  j["mapping"] = {{"iterations", mapping.iterations},
                  {"first_frame_iteration_factor", mapping.first_frame_iteration_factor},
                  {"tau_opa", mapping.thresholds.tau_opa},
                  {"tau_color", mapping.thresholds.tau_color},
                  {"tau_depth", mapping.thresholds.tau_depth},
                  {"error_densification", mapping.error_densification},
                  {"regularization", mapping.regularization},
                  {"seed_stride", mapping.seed_stride},
                  {"first_frame_stride", mapping.first_frame_stride},
                  {"initial_opacity", mapping.initial_opacity},
                  {"lambda_color", mapping.loss_weights.lambda_color},
                  {"lambda_depth", mapping.loss_weights.lambda_depth},
                  {"lambda_ssim", mapping.loss_weights.lambda_ssim},
                  {"lr_position", mapping.learning_rates.position},
                  {"lr_scale", mapping.learning_rates.scale},
                  {"lr_rotation", mapping.learning_rates.rotation},
                  {"lr_color", mapping.learning_rates.color},
                  {"lr_opacity", mapping.learning_rates.opacity},
                  {"scene_extent", scene_extent}};
  j["tracking"] = {{"iterations", tracking.iterations},
                   {"lambda_color", tracking.loss_weights.lambda_color_track},
                   {"lambda_depth", tracking.loss_weights.lambda_depth_track},
                   {"lr_translation", tracking.learning_rates.translation},
                   {"lr_rotation", tracking.learning_rates.rotation},
                   {"lr_decay", tracking.lr_decay},
                   {"early_stop_delta", tracking.early_stop_delta},
                   {"early_stop_window", tracking.early_stop_window}};
  j["output"] = {{"directory", output.directory},
                 {"checkpoint_every", output.checkpoint_every},
                 {"render_every", output.render_every},
                 {"point_cloud", output.point_cloud}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }

  RunConfig c;
  try {
    get_if(j, "seed", c.seed);
    get_if(j, "threads", c.threads);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      get_if(d, "type", c.dataset.type);
      get_if(d, "path", c.dataset.path);
      get_if(d, "max_frames", c.dataset.max_frames);
      get_if(d, "downscale", c.dataset.downscale);
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      get_if(s, "seed", c.synthetic.seed);
      get_if(s, "frames", c.synthetic.frames);
      get_if(s, "width", c.synthetic.width);
      get_if(s, "height", c.synthetic.height);
      get_if(s, "focal", c.synthetic.focal);
      get_if(s, "wall_depth", c.synthetic.wall_depth);
      get_if(s, "wall_spacing_px", c.synthetic.wall_spacing_px);
      get_if(s, "clutter", c.synthetic.clutter);
      get_if(s, "floor", c.synthetic.floor);
      get_if(s, "trajectory", c.synthetic.trajectory);
      get_if(s, "travel", c.synthetic.travel);
      get_if(s, "yaw_half_deg", c.synthetic.yaw_half_deg);
      get_if(s, "fps", c.synthetic.fps);
    }
    if (j.contains("render")) {
      const auto& r = j.at("render");
      get_if(r, "tile_size", c.render.tile_size);
      get_if(r, "alpha_max", c.render.alpha_max);
      get_if(r, "transmittance_min", c.render.transmittance_min);
    }
    if (j.contains("mapping")) {
      const auto& m = j.at("mapping");
      get_if(m, "iterations", c.mapping.iterations);
      get_if(m, "first_frame_iteration_factor", c.mapping.first_frame_iteration_factor);
      get_if(m, "tau_opa", c.mapping.thresholds.tau_opa);
      get_if(m, "tau_color", c.mapping.thresholds.tau_color);
      get_if(m, "tau_depth", c.mapping.thresholds.tau_depth);
      get_if(m, "error_densification", c.mapping.error_densification);
      get_if(m, "regularization", c.mapping.regularization);
      get_if(m, "seed_stride", c.mapping.seed_stride);
      get_if(m, "first_frame_stride", c.mapping.first_frame_stride);
      get_if(m, "initial_opacity", c.mapping.initial_opacity);
      get_if(m, "lambda_color", c.mapping.loss_weights.lambda_color);
      get_if(m, "lambda_depth", c.mapping.loss_weights.lambda_depth);
      get_if(m, "lambda_ssim", c.mapping.loss_weights.lambda_ssim);
      get_if(m, "lr_position", c.mapping.learning_rates.position);
      get_if(m, "lr_scale", c.mapping.learning_rates.scale);
      get_if(m, "lr_rotation", c.mapping.learning_rates.rotation);
      get_if(m, "lr_color", c.mapping.learning_rates.color);
      get_if(m, "lr_opacity", c.mapping.learning_rates.opacity);
      get_if(m, "scene_extent", c.scene_extent);
    }
    if (j.contains("tracking")) {
      const auto& t = j.at("tracking");
      get_if(t, "iterations", c.tracking.iterations);
      get_if(t, "lambda_color", c.tracking.loss_weights.lambda_color_track);
      get_if(t, "lambda_depth", c.tracking.loss_weights.lambda_depth_track);
      get_if(t, "lr_translation", c.tracking.learning_rates.translation);
      get_if(t, "lr_rotation", c.tracking.learning_rates.rotation);
      get_if(t, "lr_decay", c.tracking.lr_decay);
      get_if(t, "early_stop_delta", c.tracking.early_stop_delta);
      get_if(t, "early_stop_window", c.tracking.early_stop_window);
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      get_if(o, "directory", c.output.directory);
      get_if(o, "checkpoint_every", c.output.checkpoint_every);
      get_if(o, "render_every", c.output.render_every);
      get_if(o, "point_cloud", c.output.point_cloud);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot open for writing: " + path.string());
  out << to_json_string();
}

}  // namespace splat
