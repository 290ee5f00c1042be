#include "splat/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "splat/dataset.hpp"
#include "splat/errors.hpp"
#include "splat/png_io.hpp"

namespace splat {

namespace {

constexpr double kPi = 3.14159265358979323846;

Quat yaw_quat(double yaw_rad) {
  return {std::cos(yaw_rad / 2.0), 0.0, std::sin(yaw_rad / 2.0), 0.0};
}

GaussianMap build_scene(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GaussianSeed> seeds;

  // Pixel footprint at the wall fixes the texture pitch.
  const double pitch = spec.wall_spacing_px * spec.wall_depth / spec.focal;
  // Wall wide enough to cover the full yaw sweep plus lateral travel.
  const double fov_half = std::atan2(spec.width / 2.0, spec.focal);
  const double yaw_half = spec.yaw_half_deg * kPi / 180.0;
  const double half_w = spec.wall_depth * std::tan(fov_half + yaw_half) + spec.travel + 0.4;
  const double half_h = spec.wall_depth * std::tan(fov_half) + 0.4;

  for (double wy = -half_h; wy <= half_h; wy += pitch) {
    for (double wx = -half_w; wx <= half_w; wx += pitch) {
      GaussianSeed s;
      s.position = {wx + (unit(rng) - 0.5) * 0.3 * pitch, wy + (unit(rng) - 0.5) * 0.3 * pitch,
                    spec.wall_depth + (unit(rng) - 0.5) * 0.04};
      s.scale = Eigen::Vector3d::Constant(pitch * (0.6 + 0.2 * unit(rng)));
      s.color = {0.1 + 0.8 * unit(rng), 0.1 + 0.8 * unit(rng), 0.1 + 0.8 * unit(rng)};
      s.opacity = 0.85 + 0.1 * unit(rng);
      seeds.push_back(s);
    }
  }

  if (spec.floor) {
    const double floor_y = half_h * 0.55;
    for (double wz = spec.wall_depth * 0.45; wz < spec.wall_depth; wz += pitch) {
      for (double wx = -half_w; wx <= half_w; wx += pitch) {
        GaussianSeed s;
        s.position = {wx + (unit(rng) - 0.5) * 0.3 * pitch,
                      floor_y + (wz / spec.wall_depth) * 0.25, wz};
        s.scale = Eigen::Vector3d::Constant(pitch * (0.7 + 0.2 * unit(rng)));
        s.color = {0.2 + 0.5 * unit(rng), 0.15 + 0.4 * unit(rng), 0.1 + 0.3 * unit(rng)};
        s.opacity = 0.85 + 0.1 * unit(rng);
        seeds.push_back(s);
      }
    }
  }

  for (int i = 0; i < spec.clutter; ++i) {
    const double z = spec.wall_depth * (0.52 + 0.25 * unit(rng));
    const double reach = z * std::tan(fov_half + yaw_half) + spec.travel;
    const Eigen::Vector3d center((unit(rng) * 2.0 - 1.0) * reach * 0.8,
                                 (unit(rng) * 2.0 - 1.0) * z * std::tan(fov_half) * 0.6, z);
    const Eigen::Vector3d base_color(0.15 + 0.7 * unit(rng), 0.15 + 0.7 * unit(rng),
                                     0.15 + 0.7 * unit(rng));
    const int parts = 4 + static_cast<int>(unit(rng) * 4);
    for (int p = 0; p < parts; ++p) {
      GaussianSeed s;
      s.position = center + Eigen::Vector3d((unit(rng) - 0.5) * 0.16, (unit(rng) - 0.5) * 0.16,
                                            (unit(rng) - 0.5) * 0.08);
      s.scale = Eigen::Vector3d::Constant(0.035 + 0.045 * unit(rng));
      s.color = (base_color + Eigen::Vector3d::Constant(0.15 * (unit(rng) - 0.5)))
                    .cwiseMax(0.02)
                    .cwiseMin(0.98);
      s.opacity = 0.9;
      seeds.push_back(s);
    }
  }

  GaussianMap map;
  map.insert_gaussians(seeds);
  return map;
}

Trajectory build_trajectory(const SyntheticSpec& spec) {
  Trajectory traj;
  const double yaw_half = spec.yaw_half_deg * kPi / 180.0;
  for (int i = 0; i < spec.frames; ++i) {
    const double tau = spec.frames > 1 ? static_cast<double>(i) / (spec.frames - 1) : 0.0;
    CameraPose pose;
    if (spec.trajectory == "pan") {
      // Monotone sweep: start and end views share almost nothing.
      const double yaw = (2.0 * tau - 1.0) * yaw_half;
      pose.q = yaw_quat(yaw);
      pose.t = {spec.travel * (2.0 * tau - 1.0), 0.015 * std::sin(2.0 * kPi * tau), 0.0};
    } else if (spec.trajectory == "sweep") {
      const double yaw = std::sin(2.0 * kPi * tau) * yaw_half * 0.5;
      pose.q = yaw_quat(yaw);
      pose.t = {spec.travel * std::sin(kPi * tau), 0.04 * std::sin(2.0 * kPi * tau),
                0.05 * std::sin(kPi * tau)};
    } else {
      throw InvalidInputError("synthetic: unknown trajectory kind: " + spec.trajectory);
    }
    traj.push(i / spec.fps, pose);
  }
  return traj;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.frames < 1 || spec.width < 16 || spec.height < 16)
    throw InvalidInputError("synthetic: invalid spec");
  std::mt19937_64 rng(spec.seed);

  SyntheticDataset out;
  out.intrinsics.fx = spec.focal;
  out.intrinsics.fy = spec.focal;
  out.intrinsics.cx = spec.width / 2.0;
  out.intrinsics.cy = spec.height / 2.0;
  out.intrinsics.width = spec.width;
  out.intrinsics.height = spec.height;
  out.intrinsics.depth_scale = 5000.0;

  out.map = build_scene(spec, rng);
  out.trajectory = build_trajectory(spec);

  RenderSettings settings;  // single-threaded render keeps frames byte-stable
  out.frames.reserve(spec.frames);
  for (int i = 0; i < spec.frames; ++i) {
    const RenderOutput r = render(out.map, out.trajectory.poses[i], out.intrinsics, settings);
    FrameObservation frame;
    frame.timestamp = out.trajectory.timestamps[i];
    frame.index = i;
    frame.rgb = r.color;
    for (auto& v : frame.rgb.data) v = std::clamp(v, 0.0, 1.0);
    frame.depth = r.depth;
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (r.opacity.at(y, x) < 0.5) frame.depth.at(y, x) = 0.0;  // unseen -> invalid
    out.frames.push_back(std::move(frame));
  }
  return out;
}

void write_tum_layout(const SyntheticDataset& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");

  std::ofstream rgb_index(dir / "rgb.txt");
  std::ofstream depth_index(dir / "depth.txt");
  rgb_index << "# timestamp filename\n";
  depth_index << "# timestamp filename\n";
  rgb_index.precision(6);
  depth_index.precision(6);
  rgb_index << std::fixed;
  depth_index << std::fixed;

  char name[64];
  for (std::size_t i = 0; i < data.frames.size(); ++i) {
    const auto& f = data.frames[i];
    std::snprintf(name, sizeof name, "%06zu.png", i);

    Image<std::uint8_t> rgb8(f.rgb.width, f.rgb.height, 3);
    for (std::size_t k = 0; k < f.rgb.data.size(); ++k)
      rgb8.data[k] =
          static_cast<std::uint8_t>(std::lround(std::clamp(f.rgb.data[k], 0.0, 1.0) * 255.0));
    write_png_rgb8(dir / "rgb" / name, rgb8);

    Image<std::uint16_t> depth16(f.depth.width, f.depth.height, 1);
    for (std::size_t k = 0; k < f.depth.data.size(); ++k) {
      const double raw = f.depth.data[k] * data.intrinsics.depth_scale;
      depth16.data[k] = static_cast<std::uint16_t>(std::clamp(raw, 0.0, 65535.0));
    }
    write_png_gray16(dir / "depth" / name, depth16);

    rgb_index << f.timestamp << " rgb/" << name << '\n';
    depth_index << f.timestamp << " depth/" << name << '\n';
  }

  save_tum_trajectory(dir / "groundtruth.txt", data.trajectory);

  std::ofstream calib(dir / "calibration.txt");
  calib << "# fx fy cx cy depth_scale\n";
  calib.precision(10);
  calib << data.intrinsics.fx << ' ' << data.intrinsics.fy << ' ' << data.intrinsics.cx << ' '
        << data.intrinsics.cy << ' ' << data.intrinsics.depth_scale << '\n';

  data.map.save_checkpoint(dir / "scene.bin");
}

}  // namespace splat
