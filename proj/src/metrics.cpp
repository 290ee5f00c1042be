#include "splat/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "splat/errors.hpp"
#include "splat/losses.hpp"

namespace splat {

double psnr_db(const ImageD& a, const ImageD& b) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

namespace {

constexpr double kAteMaxDt = 0.02;

std::vector<std::pair<std::size_t, std::size_t>> pair_by_timestamp(const Trajectory& est,
                                                                   const Trajectory& gt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t j = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double ts = est.timestamps[i];
    while (j + 1 < gt.size() &&
           std::abs(gt.timestamps[j + 1] - ts) <= std::abs(gt.timestamps[j] - ts))
      ++j;
    if (j < gt.size() && std::abs(gt.timestamps[j] - ts) <= kAteMaxDt) pairs.push_back({i, j});
  }
  return pairs;
}

}  // namespace

AteResult ate_rmse(const Trajectory& estimate, const Trajectory& ground_truth, bool align) {
  const auto pairs = pair_by_timestamp(estimate, ground_truth);
  if (pairs.size() < 3) throw EvalError("ate_rmse: fewer than 3 matched timestamp pairs");

  const std::size_t n = pairs.size();
  Eigen::Matrix3Xd est_pts(3, n), gt_pts(3, n);
  for (std::size_t k = 0; k < n; ++k) {
    est_pts.col(k) = estimate.poses[pairs[k].first].t;
    gt_pts.col(k) = ground_truth.poses[pairs[k].second].t;
  }

  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();
  if (align) {
    const Eigen::Vector3d est_mean = est_pts.rowwise().mean();
    const Eigen::Vector3d gt_mean = gt_pts.rowwise().mean();
    const Eigen::Matrix3d cross =
        (gt_pts.colwise() - gt_mean) * (est_pts.colwise() - est_mean).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    rot = svd.matrixU() * d * svd.matrixV().transpose();
    trans = gt_mean - rot * est_mean;
  }

  AteResult res;
  res.pairs = n;
  double sq_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d aligned = rot * est_pts.col(k) + trans;
    sq_sum += (aligned - gt_pts.col(k)).squaredNorm();
    CameraPose p = estimate.poses[pairs[k].first];
    p.t = aligned;
    res.aligned_estimate.push(estimate.timestamps[pairs[k].first], p);
  }
  res.rmse_cm = std::sqrt(sq_sum / static_cast<double>(n)) * 100.0;
  return res;
}

ImageSetMetrics image_metrics(std::span<const ImageD> rendered,
                              std::span<const ImageD> reference) {
  if (rendered.size() != reference.size() || rendered.empty())
    throw EvalError("image_metrics: empty or mismatched image sets");
  ImageSetMetrics out;
  out.frames = rendered.size();
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    out.psnr_db += psnr_db(rendered[i], reference[i]);
    out.ssim += ssim(rendered[i], reference[i]).value;
  }
  out.psnr_db /= static_cast<double>(out.frames);
  out.ssim /= static_cast<double>(out.frames);
  return out;
}

double depth_l1_cm(std::span<const ImageD> rendered, std::span<const ImageD> reference) {
  if (rendered.size() != reference.size() || rendered.empty())
    throw EvalError("depth_l1: empty or mismatched depth sets");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < rendered.size(); ++i) {
    require_same_shape(rendered[i], reference[i], "depth_l1");
    for (std::size_t p = 0; p < rendered[i].data.size(); ++p) {
      const double a = rendered[i].data[p], b = reference[i].data[p];
      if (a > 0.0 && b > 0.0) {
        sum += std::abs(a - b);
        ++count;
      }
    }
  }
  if (count == 0) throw EvalError("depth_l1: no valid depth pixels");
  return sum / static_cast<double>(count) * 100.0;
}

}  // namespace splat
