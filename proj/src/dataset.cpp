#include "splat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "splat/errors.hpp"
#include "splat/png_io.hpp"

namespace splat {

namespace {

struct TimedEntry {
  double timestamp;
  std::string value;
};

std::vector<TimedEntry> read_index_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset: missing index file: " + path.string());
  std::vector<TimedEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TimedEntry e;
    if (!(ss >> e.timestamp >> e.value)) continue;
    entries.push_back(e);
  }
  std::sort(entries.begin(), entries.end(),
            [](const TimedEntry& a, const TimedEntry& b) { return a.timestamp < b.timestamp; });
  return entries;
}

// fr1 defaults; real sequences should ship a calibration.txt.
CameraIntrinsics default_tum_intrinsics() {
  CameraIntrinsics k;
  k.fx = 517.306408;
  k.fy = 516.469215;
  k.cx = 318.643040;
  k.cy = 255.313989;
  k.width = 640;
  k.height = 480;
  k.depth_scale = 5000.0;
  return k;
}

std::optional<CameraIntrinsics> read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    CameraIntrinsics k;
    if (!(ss >> k.fx >> k.fy >> k.cx >> k.cy)) break;
    if (!(ss >> k.depth_scale)) k.depth_scale = 5000.0;
    return k;
  }
  throw DatasetError("dataset: malformed calibration.txt: " + path.string());
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> associate_timestamps(
    const std::vector<double>& a, const std::vector<double>& b, double max_dt) {
  // All candidate pairs within max_dt, best |dt| first, matched greedily with
  // each entry used at most once (the standard TUM association rule).
  struct Cand {
    double dt;
    std::size_t i, j;
  };
  std::vector<Cand> cands;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    while (lo < b.size() && b[lo] < a[i] - max_dt) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] <= a[i] + max_dt; ++j)
      cands.push_back({std::abs(a[i] - b[j]), i, j});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.dt != y.dt) return x.dt < y.dt;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<bool> used_a(a.size(), false), used_b(b.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = true;
    used_b[c.j] = true;
    pairs.push_back({c.i, c.j});
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

LoadedDataset load_tum_rgbd(const std::filesystem::path& dir, const TumLoadOptions& options) {
  const auto rgb_entries = read_index_file(dir / "rgb.txt");
  const auto depth_entries = read_index_file(dir / "depth.txt");

  LoadedDataset out;
  CameraIntrinsics base_intrinsics;
  if (options.intrinsics_override) {
    base_intrinsics = *options.intrinsics_override;
  } else if (auto k = read_calibration(dir / "calibration.txt")) {
    base_intrinsics = *k;
  } else {
    base_intrinsics = default_tum_intrinsics();
  }
  out.intrinsics = base_intrinsics;

  Trajectory gt_raw;
  if (std::filesystem::exists(dir / "groundtruth.txt")) {
    gt_raw = load_tum_trajectory(dir / "groundtruth.txt");
    out.has_ground_truth = !gt_raw.empty();
  }

  std::vector<double> rgb_ts(rgb_entries.size()), depth_ts(depth_entries.size());
  for (std::size_t i = 0; i < rgb_entries.size(); ++i) rgb_ts[i] = rgb_entries[i].timestamp;
  for (std::size_t i = 0; i < depth_entries.size(); ++i) depth_ts[i] = depth_entries[i].timestamp;
  const auto rgbd_pairs = associate_timestamps(rgb_ts, depth_ts, options.max_association_dt);

  int index = 0;
  double last_ts = -std::numeric_limits<double>::infinity();
  for (const auto& [ri, di] : rgbd_pairs) {
    if (options.max_frames > 0 && index >= options.max_frames) break;
    const double ts = rgb_entries[ri].timestamp;

    CameraPose gt_pose;
    if (out.has_ground_truth) {
      // Nearest ground-truth sample; frame dropped when none is close enough.
      std::size_t best = 0;
      double best_dt = std::numeric_limits<double>::infinity();
      const auto it =
          std::lower_bound(gt_raw.timestamps.begin(), gt_raw.timestamps.end(), ts);
      const std::size_t hi = static_cast<std::size_t>(it - gt_raw.timestamps.begin());
      for (std::size_t j = (hi > 0 ? hi - 1 : 0); j < std::min(hi + 2, gt_raw.size()); ++j) {
        const double dt = std::abs(gt_raw.timestamps[j] - ts);
        if (dt < best_dt) {
          best_dt = dt;
          best = j;
        }
      }
      if (best_dt > options.max_association_dt) continue;
      gt_pose = gt_raw.poses[best];
    }

    const auto rgb8 = read_png_rgb8(dir / rgb_entries[ri].value);
    const auto depth16 = read_png_gray16(dir / depth_entries[di].value);
    if (rgb8.width != depth16.width || rgb8.height != depth16.height)
      throw DatasetError("dataset: rgb/depth resolution mismatch at " + rgb_entries[ri].value);

    FrameObservation frame;
    frame.timestamp = ts;
    frame.index = index;
    frame.rgb = ImageD::zeros(rgb8.width, rgb8.height, 3);
    for (std::size_t i = 0; i < rgb8.data.size(); ++i)
      frame.rgb.data[i] = rgb8.data[i] / 255.0;
    frame.depth = ImageD::zeros(depth16.width, depth16.height, 1);
    for (std::size_t i = 0; i < depth16.data.size(); ++i)
      frame.depth.data[i] = depth16.data[i] / out.intrinsics.depth_scale;

    if (options.downscale > 1) frame = downscale_frame(frame, options.downscale);

    if (!(ts > last_ts)) continue;  // duplicate timestamps cannot enter the trajectory
    last_ts = ts;
    if (out.has_ground_truth) out.ground_truth.push(ts, gt_pose);
    out.frames.push_back(std::move(frame));
    ++index;
  }

  if (out.frames.empty()) throw DatasetError("dataset: no associable frames in " + dir.string());

  if (options.downscale > 1)
    out.intrinsics = downscale_intrinsics(base_intrinsics, options.downscale);
  out.intrinsics.width = out.frames.front().rgb.width;
  out.intrinsics.height = out.frames.front().rgb.height;

  out.dropped_frames = static_cast<int>(rgb_entries.size()) - static_cast<int>(out.frames.size());
  return out;
}

void save_tum_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("trajectory: cannot open for writing: " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  out.precision(10);
  out << std::fixed;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& p = traj.poses[i];
    out << traj.timestamps[i] << ' ' << p.t.x() << ' ' << p.t.y() << ' ' << p.t.z() << ' '
        << p.q.x << ' ' << p.q.y << ' ' << p.q.z << ' ' << p.q.w << '\n';
  }
}

Trajectory load_tum_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("trajectory: cannot open: " + path.string());
  struct Row {
    double ts;
    CameraPose pose;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) continue;
    CameraPose pose;
    pose.t = {tx, ty, tz};
    pose.q = Quat{qw, qx, qy, qz}.normalized();
    rows.push_back({ts, pose});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
  Trajectory traj;
  for (const auto& r : rows) {
    if (!traj.timestamps.empty() && !(r.ts > traj.timestamps.back())) continue;
    traj.push(r.ts, r.pose);
  }
  return traj;
}

CameraIntrinsics downscale_intrinsics(const CameraIntrinsics& K, int divisor) {
  if (divisor < 1) throw InvalidInputError("downscale: divisor must be >= 1");
  CameraIntrinsics out = K;
  out.fx /= divisor;
  out.fy /= divisor;
  out.cx /= divisor;
  out.cy /= divisor;
  out.width = K.width / divisor;
  out.height = K.height / divisor;
  return out;
}

FrameObservation downscale_frame(const FrameObservation& frame, int divisor) {
  if (divisor < 1) throw InvalidInputError("downscale: divisor must be >= 1");
  if (divisor == 1) return frame;
  FrameObservation out;
  out.timestamp = frame.timestamp;
  out.index = frame.index;
  const int w = frame.rgb.width / divisor, h = frame.rgb.height / divisor;
  out.rgb = ImageD::zeros(w, h, 3);
  out.depth = ImageD::zeros(w, h, 1);
  const double inv_area = 1.0 / (divisor * divisor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < divisor; ++dy)
          for (int dx = 0; dx < divisor; ++dx)
            acc += frame.rgb.at(y * divisor + dy, x * divisor + dx, c);
        out.rgb.at(y, x, c) = acc * inv_area;
      }
      out.depth.at(y, x) = frame.depth.at(y * divisor, x * divisor);
    }
  }
  return out;
}

}  // namespace splat
