#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>

namespace splat {

// Conventions fixed repo-wide:
//   - Quaternions are scalar-first (w, x, y, z), Hamilton product.
//   - CameraPose stores the world-from-camera transform:
//       x_world = R(q) * x_cam + t,   t = camera center in world coordinates.
//   - Camera frame: x right, y down, z forward (depth).
//   - Pixel centers sit at integer coordinates; a camera-space point projects to
//       u = fx * X/Z + cx,  v = fy * Y/Z + cy.

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  Quat() = default;
  Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

  double norm() const;
  Quat normalized() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  bool is_finite() const;

  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
  static Quat from_coeffs(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

Quat operator*(const Quat& a, const Quat& b);

// Rotation matrix of a unit quaternion (raw polynomial form; callers keep ‖q‖ ≈ 1).
Eigen::Matrix3d quat_to_rotmat(const Quat& q);

// d R / d (w,x,y,z) of the same polynomial, for chain rules through rotations.
std::array<Eigen::Matrix3d, 4> quat_rotmat_jacobian(const Quat& q);

struct CameraPose {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();  // camera center in world, meters
  Quat q = Quat::identity();                    // camera-to-world rotation

  static CameraPose identity() { return {}; }

  Eigen::Matrix3d rotation() const { return quat_to_rotmat(q); }
  CameraPose inverse() const;
  bool is_finite() const;
};

// Composition as rigid transforms: (a ∘ b)(x) = a(b(x)).
CameraPose compose(const CameraPose& a, const CameraPose& b);

Eigen::Vector3d world_to_camera(const CameraPose& pose, const Eigen::Vector3d& p_world);
Eigen::Vector3d camera_to_world(const CameraPose& pose, const Eigen::Vector3d& p_cam);

struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;
  double depth_scale = 5000.0;  // raw depth unit -> meters divisor

  void validate() const;  // throws InvalidInputError
};

// z <= kNearPlane is culled; 2D covariance gets kCovarianceFloorPx2 added to its
// diagonal; the compositing footprint is truncated at kFootprintSigmas.
inline constexpr double kNearPlane = 0.01;          // meters
inline constexpr double kCovarianceFloorPx2 = 0.3;  // px^2
inline constexpr double kFootprintSigmas = 3.0;

struct Projected2DGaussian {
  Eigen::Vector2d mean_px = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov_px = Eigen::Matrix2d::Identity();
  double depth = 0.0;      // camera-space z of the mean, meters
  double radius_px = 0.0;  // kFootprintSigmas * sqrt(max eigenvalue of cov_px)
};

// EWA projection of a 3D Gaussian (world covariance R diag(s)^2 R^T) through the
// camera: Sigma' = J W Sigma W^T J^T with J the pinhole Jacobian at the mean.
// Returns nullopt when the Gaussian is behind the near plane or its footprint
// misses the image entirely.
std::optional<Projected2DGaussian> project_gaussian(const Eigen::Vector3d& mean,
                                                    const Eigen::Vector3d& scale,
                                                    const Quat& rot,
                                                    const CameraPose& pose,
                                                    const CameraIntrinsics& K);

struct ProjectionGradients {
  Eigen::Vector3d d_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_scale = Eigen::Vector3d::Zero();  // w.r.t. exposed (positive) scale
  Eigen::Vector4d d_rot = Eigen::Vector4d::Zero();    // w.r.t. raw (w,x,y,z)
  Eigen::Vector3d d_t = Eigen::Vector3d::Zero();
  Eigen::Vector4d d_q = Eigen::Vector4d::Zero();
};

// Chain rule through project_gaussian. Upstream gradients are w.r.t. the projected
// mean, the (symmetric) projected covariance, and the camera-space depth. Must only
// be called for Gaussians that were retained by project_gaussian.
ProjectionGradients project_gaussian_backward(const Eigen::Vector3d& mean,
                                              const Eigen::Vector3d& scale,
                                              const Quat& rot,
                                              const CameraPose& pose,
                                              const CameraIntrinsics& K,
                                              const Eigen::Vector2d& d_mean_px,
                                              const Eigen::Matrix2d& d_cov_px,
                                              double d_depth,
                                              bool want_pose);

}  // namespace splat
