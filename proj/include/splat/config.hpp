#pragma once

#include <filesystem>
#include <string>

#include "splat/mapper.hpp"
#include "splat/renderer.hpp"
#include "splat/synthetic.hpp"
#include "splat/tracker.hpp"

namespace splat {

// Every tunable in one place. Serialized as JSON; print-config dumps the
// defaults. validate() enforces the documented ranges.
struct RunConfig {
  std::uint64_t seed = 7;
  int threads = 0;  // 0 = hardware concurrency

  struct Dataset {
    std::string type = "tum";  // "tum" | "synthetic"
    std::string path;
    int max_frames = 0;
    int downscale = 1;
  } dataset;

  SyntheticSpec synthetic;

  RenderSettings render;

  MappingConfig mapping;
  double scene_extent = 0.0;  // 0 = auto from the first frame's depths

  TrackingConfig tracking;

  struct Output {
    std::string directory;
    int checkpoint_every = 50;  // frames; 0 disables periodic checkpoints
    int render_every = 0;       // dump debug renders every K frames; 0 = off
    bool point_cloud = false;
  } output;

  void validate() const;  // throws ConfigError

  std::string to_json_string() const;
  static RunConfig from_json_string(const std::string& json);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace splat
