#include "support/reference_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace splat::testing {

namespace {

// Own quaternion-to-matrix (scalar-first), independent of splat::quat_to_rotmat.
Eigen::Matrix3d rot_of(const Quat& q) {
  Eigen::Matrix3d m;
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  m(0, 0) = 1 - 2 * y * y - 2 * z * z;
  m(0, 1) = 2 * x * y - 2 * w * z;
  m(0, 2) = 2 * x * z + 2 * w * y;
  m(1, 0) = 2 * x * y + 2 * w * z;
  m(1, 1) = 1 - 2 * x * x - 2 * z * z;
  m(1, 2) = 2 * y * z - 2 * w * x;
  m(2, 0) = 2 * x * z - 2 * w * y;
  m(2, 1) = 2 * y * z + 2 * w * x;
  m(2, 2) = 1 - 2 * x * x - 2 * y * y;
  return m;
}

struct Splat {
  double u, v;          // projected mean, pixels
  double ia, ib, ic;    // inverse 2D covariance
  double z;
  double radius;
  double opacity;
  Eigen::Vector3d color;
};

}  // namespace

ReferenceImages reference_render(const GaussianMap& map, const CameraPose& pose,
                                 const CameraIntrinsics& K, double alpha_max) {
  std::vector<Splat> splats;
  const Eigen::Matrix3d cam_from_world = rot_of(pose.q).transpose();

  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map.gaussian(i);
    const Eigen::Vector3d p = cam_from_world * (g.position - pose.t);
    if (p.z() <= 0.01) continue;

    const Eigen::Matrix3d r = rot_of(g.rotation);
    const Eigen::Vector3d s = g.scale();
    Eigen::Matrix3d cov3 = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) cov3 += s[k] * s[k] * r.col(k) * r.col(k).transpose();
    const Eigen::Matrix3d cov_cam = cam_from_world * cov3 * cam_from_world.transpose();

    const double z = p.z();
    Eigen::Matrix<double, 2, 3> jac;
    jac << K.fx / z, 0, -K.fx * p.x() / (z * z), 0, K.fy / z, -K.fy * p.y() / (z * z);
    Eigen::Matrix2d cov2 = jac * cov_cam * jac.transpose();
    cov2(0, 0) += 0.3;
    cov2(1, 1) += 0.3;

    const double tr_half = 0.5 * (cov2(0, 0) + cov2(1, 1));
    const double det = cov2(0, 0) * cov2(1, 1) - cov2(0, 1) * cov2(1, 0);
    const double lmax = tr_half + std::sqrt(std::max(0.0, tr_half * tr_half - det));

    Splat sp;
    sp.u = K.fx * p.x() / z + K.cx;
    sp.v = K.fy * p.y() / z + K.cy;
    sp.ia = cov2(1, 1) / det;
    sp.ib = -cov2(0, 1) / det;
    sp.ic = cov2(0, 0) / det;
    sp.z = z;
    sp.radius = 3.0 * std::sqrt(lmax);
    sp.opacity = g.opacity();
    sp.color = g.color;
    if (sp.u + sp.radius < 0 || sp.u - sp.radius > K.width - 1.0 || sp.v + sp.radius < 0 ||
        sp.v - sp.radius > K.height - 1.0)
      continue;
    splats.push_back(sp);
  }

  std::stable_sort(splats.begin(), splats.end(),
                   [](const Splat& a, const Splat& b) { return a.z < b.z; });

  ReferenceImages out;
  out.color = ImageD::zeros(K.width, K.height, 3);
  out.depth = ImageD::zeros(K.width, K.height, 1);
  out.opacity = ImageD::zeros(K.width, K.height, 1);

  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      double transmittance = 1.0;
      Eigen::Vector3d color = Eigen::Vector3d::Zero();
      double depth = 0.0, opacity = 0.0;
      for (const Splat& sp : splats) {
        const double dx = x - sp.u, dy = y - sp.v;
        if (dx * dx + dy * dy > sp.radius * sp.radius) continue;
        const double sigma = 0.5 * (sp.ia * dx * dx + sp.ic * dy * dy) + sp.ib * dx * dy;
        double alpha = sp.opacity * std::exp(-sigma);
        alpha = std::min(alpha, alpha_max);
        if (alpha <= 0.0) continue;
        const double w = alpha * transmittance;
        color += sp.color * w;
        depth += sp.z * w;
        opacity += w;
        transmittance *= 1.0 - alpha;
      }
      out.color.at(y, x, 0) = color.x();
      out.color.at(y, x, 1) = color.y();
      out.color.at(y, x, 2) = color.z();
      out.depth.at(y, x) = depth;
      out.opacity.at(y, x) = opacity;
    }
  }
  return out;
}

}  // namespace splat::testing
