#include "splat/gaussian_map.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "splat/errors.hpp"

namespace splat {

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInputError("logit: argument outside (0,1)");
  return std::log(p / (1.0 - p));
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

namespace {

void validate_seed(const GaussianSeed& s) {
  if (!s.position.allFinite() || !s.scale.allFinite() || !s.color.allFinite() ||
      !s.rotation.is_finite() || !std::isfinite(s.opacity))
    throw InvalidInputError("gaussian seed: non-finite field");
  if (!(s.scale.array() > 0.0).all())
    throw InvalidInputError("gaussian seed: scale must be positive");
  if (!(s.opacity > 0.0 && s.opacity < 1.0))
    throw InvalidInputError("gaussian seed: opacity must lie in (0,1)");
  if ((s.color.array() < 0.0).any() || (s.color.array() > 1.0).any())
    throw InvalidInputError("gaussian seed: color outside [0,1]");
  if (std::abs(s.rotation.norm() - 1.0) > 1e-6)
    throw InvalidInputError("gaussian seed: rotation must be a unit quaternion");
}

}  // namespace

IndexRange GaussianMap::insert_gaussians(std::span<const GaussianSeed> seeds) {
  for (const auto& s : seeds) validate_seed(s);

  IndexRange range{gaussians_.size(), gaussians_.size() + seeds.size()};
  gaussians_.reserve(range.end);
  importance_.reserve(range.end);
  anchors_.reserve(range.end);
  for (const auto& s : seeds) {
    Gaussian g;
    g.position = s.position;
    g.log_scale = s.scale.array().log();
    g.rotation = s.rotation.normalized();
    g.color = s.color;
    g.opacity_logit = logit(s.opacity);
    gaussians_.push_back(g);
    importance_.push_back({});
    anchors_.push_back({s.scale, s.color, 0.0});
  }
  return range;
}

void GaussianMap::update_importance(std::span<const std::size_t> touched,
                                    std::span<const ImportanceSample> samples) {
  if (touched.size() != samples.size())
    throw InternalError("update_importance: touched/sample count mismatch");
  for (std::size_t k = 0; k < touched.size(); ++k) {
    const std::size_t i = touched[k];
    if (i >= gaussians_.size()) throw InternalError("update_importance: index out of range");
    auto& st = importance_[i];
    st.seen_count += 1;
    st.grad_scale_sum += samples[k].scale.cwiseAbs();
    st.grad_color_sum += samples[k].color.cwiseAbs();
    st.grad_depth_sum += std::abs(samples[k].depth);
  }
}

ImportanceWeights GaussianMap::importance_weights(std::size_t i) const {
  const auto& st = importance_[i];
  if (st.seen_count == 0) return {};
  const double n = static_cast<double>(st.seen_count);
  return {st.grad_scale_sum / n, st.grad_color_sum / n, st.grad_depth_sum / n};
}

void GaussianMap::snapshot_anchors(const CameraPose& pose) {
  if (!pose.is_finite()) throw InvalidInputError("snapshot_anchors: non-finite pose");
  const Eigen::Matrix3d w = pose.rotation().transpose();
  for (std::size_t i = 0; i < gaussians_.size(); ++i) {
    const Gaussian& g = gaussians_[i];
    anchors_[i].scale_ref = g.scale();
    anchors_[i].color_ref = g.color;
    anchors_[i].depth_ref = (w * (g.position - pose.t)).z();
  }
}

// Checkpoint layout (little-endian):
//   char[4]  magic "GSMP"
//   u32      version (1)
//   u64      gaussian count
//   then per Gaussian, 14 doubles:
//     position xyz, log-scale xyz, rotation wxyz, color rgb, opacity logit.
namespace {
constexpr char kMagic[4] = {'G', 'S', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void GaussianMap::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("checkpoint: cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t count = gaussians_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& g : gaussians_) {
    double rec[14] = {g.position.x(), g.position.y(), g.position.z(),
                      g.log_scale.x(), g.log_scale.y(), g.log_scale.z(),
                      g.rotation.w, g.rotation.x, g.rotation.y, g.rotation.z,
                      g.color.x(), g.color.y(), g.color.z(),
                      g.opacity_logit};
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) throw InvalidInputError("checkpoint: write failed: " + path.string());
}

GaussianMap GaussianMap::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("checkpoint: cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw InvalidInputError("checkpoint: bad magic: " + path.string());
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kVersion) throw InvalidInputError("checkpoint: unsupported version");
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  GaussianMap map;
  map.gaussians_.resize(count);
  map.importance_.resize(count);
  map.anchors_.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    double rec[14];
    in.read(reinterpret_cast<char*>(rec), sizeof rec);
    if (!in) throw InvalidInputError("checkpoint: truncated file");
    Gaussian& g = map.gaussians_[i];
    g.position = {rec[0], rec[1], rec[2]};
    g.log_scale = {rec[3], rec[4], rec[5]};
    g.rotation = {rec[6], rec[7], rec[8], rec[9]};
    g.color = {rec[10], rec[11], rec[12]};
    g.opacity_logit = rec[13];
    map.anchors_[i] = {g.scale(), g.color, 0.0};
  }
  return map;
}

void GaussianMap::export_point_cloud(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("point cloud: cannot open for writing: " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << gaussians_.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (const auto& g : gaussians_) {
    const auto c = (g.color * 255.0).array().round().cwiseMin(255.0).cwiseMax(0.0);
    out << g.position.x() << ' ' << g.position.y() << ' ' << g.position.z() << ' '
        << static_cast<int>(c[0]) << ' ' << static_cast<int>(c[1]) << ' '
        << static_cast<int>(c[2]) << '\n';
  }
}

}  // namespace splat
