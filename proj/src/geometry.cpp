#include "splat/geometry.hpp"

#include <cmath>

#include "splat/errors.hpp"

namespace splat {

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInputError("quaternion: cannot normalize");
  return {w / n, x / n, y / n, z / n};
}

bool Quat::is_finite() const {
  return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Quat operator*(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Eigen::Matrix3d quat_to_rotmat(const Quat& q) {
  if (!q.is_finite()) throw InvalidInputError("quat_to_rotmat: non-finite quaternion");
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

std::array<Eigen::Matrix3d, 4> quat_rotmat_jacobian(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  std::array<Eigen::Matrix3d, 4> d;
  d[0] << 0, -z, y,
      z, 0, -x,
      -y, x, 0;
  d[1] << 0, y, z,
      y, -2 * x, -w,
      z, w, -2 * x;
  d[2] << -2 * y, x, w,
      x, 0, z,
      -w, z, -2 * y;
  d[3] << -2 * z, -w, x,
      w, -2 * z, y,
      x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

CameraPose CameraPose::inverse() const {
  const Eigen::Matrix3d r = rotation();
  return {-(r.transpose() * t), q.conjugate()};
}

bool CameraPose::is_finite() const { return t.allFinite() && q.is_finite(); }

CameraPose compose(const CameraPose& a, const CameraPose& b) {
  return {a.rotation() * b.t + a.t, a.q * b.q};
}

Eigen::Vector3d world_to_camera(const CameraPose& pose, const Eigen::Vector3d& p_world) {
  if (!p_world.allFinite() || !pose.is_finite())
    throw InvalidInputError("world_to_camera: non-finite input");
  return pose.rotation().transpose() * (p_world - pose.t);
}

Eigen::Vector3d camera_to_world(const CameraPose& pose, const Eigen::Vector3d& p_cam) {
  if (!p_cam.allFinite() || !pose.is_finite())
    throw InvalidInputError("camera_to_world: non-finite input");
  return pose.rotation() * p_cam + pose.t;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw InvalidInputError("intrinsics: focal lengths must be positive");
  if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height))
    throw InvalidInputError("intrinsics: principal point outside image");
  if (!(depth_scale > 0)) throw InvalidInputError("intrinsics: depth_scale must be positive");
}

namespace {

struct ProjectionFwd {
  Eigen::Matrix3d w_rot;       // world -> camera rotation
  Eigen::Vector3d p_cam;       // mean in camera frame
  Eigen::Matrix3d rot_g;       // Gaussian rotation matrix
  Eigen::Matrix3d cov_world;   // R diag(s^2) R^T
  Eigen::Matrix3d cov_cam;     // W cov_world W^T
  Eigen::Matrix<double, 2, 3> jac;
  Projected2DGaussian out;
  bool culled = false;
};

ProjectionFwd project_fwd(const Eigen::Vector3d& mean, const Eigen::Vector3d& scale,
                          const Quat& rot, const CameraPose& pose, const CameraIntrinsics& K) {
  ProjectionFwd f;
  f.w_rot = quat_to_rotmat(pose.q).transpose();
  f.p_cam = f.w_rot * (mean - pose.t);
  const double z = f.p_cam.z();
  if (z <= kNearPlane) {
    f.culled = true;
    return f;
  }
  const double x = f.p_cam.x(), y = f.p_cam.y();

  f.rot_g = quat_to_rotmat(rot);
  f.cov_world = f.rot_g * scale.cwiseProduct(scale).asDiagonal() * f.rot_g.transpose();
  f.cov_cam = f.w_rot * f.cov_world * f.w_rot.transpose();

  f.jac << K.fx / z, 0, -K.fx * x / (z * z),
      0, K.fy / z, -K.fy * y / (z * z);

  Eigen::Matrix2d cov2 = f.jac * f.cov_cam * f.jac.transpose();
  cov2(0, 0) += kCovarianceFloorPx2;
  cov2(1, 1) += kCovarianceFloorPx2;

  const double mid = 0.5 * (cov2(0, 0) + cov2(1, 1));
  const double disc = std::sqrt(std::max(0.0, mid * mid - (cov2(0, 0) * cov2(1, 1) - cov2(0, 1) * cov2(1, 0))));
  const double lambda_max = mid + disc;

  f.out.mean_px = {K.fx * x / z + K.cx, K.fy * y / z + K.cy};
  f.out.cov_px = cov2;
  f.out.depth = z;
  f.out.radius_px = kFootprintSigmas * std::sqrt(lambda_max);

  const double r = f.out.radius_px;
  const auto& mu = f.out.mean_px;
  if (mu.x() + r < 0.0 || mu.x() - r > K.width - 1.0 || mu.y() + r < 0.0 || mu.y() - r > K.height - 1.0)
    f.culled = true;
  return f;
}

}  // namespace

std::optional<Projected2DGaussian> project_gaussian(const Eigen::Vector3d& mean,
                                                    const Eigen::Vector3d& scale,
                                                    const Quat& rot,
                                                    const CameraPose& pose,
                                                    const CameraIntrinsics& K) {
  if (!(scale.array() > 0).all()) throw InvalidInputError("project_gaussian: scale must be positive");
  ProjectionFwd f = project_fwd(mean, scale, rot, pose, K);
  if (f.culled) return std::nullopt;
  return f.out;
}

ProjectionGradients project_gaussian_backward(const Eigen::Vector3d& mean,
                                              const Eigen::Vector3d& scale,
                                              const Quat& rot,
                                              const CameraPose& pose,
                                              const CameraIntrinsics& K,
                                              const Eigen::Vector2d& d_mean_px,
                                              const Eigen::Matrix2d& d_cov_px,
                                              double d_depth,
                                              bool want_pose) {
  ProjectionFwd f = project_fwd(mean, scale, rot, pose, K);
  if (f.culled) throw InternalError("project_gaussian_backward: called for a culled Gaussian");

  const double x = f.p_cam.x(), y = f.p_cam.y(), z = f.p_cam.z();
  const double z2 = z * z, z3 = z2 * z;

  // Symmetrize the upstream covariance gradient; the floor add is identity.
  const Eigen::Matrix2d v = 0.5 * (d_cov_px + d_cov_px.transpose());

  // cov_px = J M J^T  =>  dM = J^T V J,  dJ = 2 V J M.
  const Eigen::Matrix3d d_cov_cam = f.jac.transpose() * v * f.jac;
  const Eigen::Matrix<double, 2, 3> d_jac = 2.0 * v * f.jac * f.cov_cam;

  // Pixel-mean chain plus the J-entries' dependence on the camera-space mean.
  Eigen::Vector3d d_pcam = Eigen::Vector3d::Zero();
  d_pcam.x() = d_mean_px.x() * K.fx / z + d_jac(0, 2) * (-K.fx / z2);
  d_pcam.y() = d_mean_px.y() * K.fy / z + d_jac(1, 2) * (-K.fy / z2);
  d_pcam.z() = -d_mean_px.x() * K.fx * x / z2 - d_mean_px.y() * K.fy * y / z2
               + d_jac(0, 0) * (-K.fx / z2) + d_jac(1, 1) * (-K.fy / z2)
               + d_jac(0, 2) * (2.0 * K.fx * x / z3) + d_jac(1, 2) * (2.0 * K.fy * y / z3)
               + d_depth;

  ProjectionGradients g;
  g.d_mean = f.w_rot.transpose() * d_pcam;

  // cov_cam = W cov_world W^T.
  const Eigen::Matrix3d d_cov_world = f.w_rot.transpose() * d_cov_cam * f.w_rot;

  // cov_world = R diag(s^2) R^T.
  const Eigen::Matrix3d rtdr = f.rot_g.transpose() * d_cov_world * f.rot_g;
  for (int k = 0; k < 3; ++k) g.d_scale[k] = 2.0 * scale[k] * rtdr(k, k);

  const Eigen::Matrix3d d_rot_g =
      2.0 * d_cov_world * f.rot_g * scale.cwiseProduct(scale).asDiagonal().toDenseMatrix();
  const auto jr = quat_rotmat_jacobian(rot);
  for (int k = 0; k < 4; ++k) g.d_rot[k] = (d_rot_g.array() * jr[k].array()).sum();

  if (want_pose) {
    g.d_t = -(f.w_rot.transpose() * d_pcam);
    // W appears in p_cam = W (mean - t) and in cov_cam = W cov_world W^T.
    const Eigen::Matrix3d d_w =
        d_pcam * (mean - pose.t).transpose() + 2.0 * d_cov_cam * f.w_rot * f.cov_world;
    const Eigen::Matrix3d d_rq = d_w.transpose();  // W = R(q)^T
    const auto jq = quat_rotmat_jacobian(pose.q);
    for (int k = 0; k < 4; ++k) g.d_q[k] = (d_rq.array() * jq[k].array()).sum();
  }
  return g;
}

}  // namespace splat
