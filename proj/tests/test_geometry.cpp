#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "splat/errors.hpp"
#include "splat/geometry.hpp"
#include "support/test_util.hpp"

using namespace splat;
using testing::random_quat;
using testing::test_intrinsics;

TEST_SUITE("geometry") {

TEST_CASE("quat_to_rotmat identity") {
  CHECK(quat_to_rotmat(Quat::identity()).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
}

TEST_CASE("quat_to_rotmat 180deg about z") {
  const Eigen::Matrix3d r = quat_to_rotmat({0, 0, 0, 1});
  Eigen::Matrix3d expected = Eigen::Vector3d(-1, -1, 1).asDiagonal();
  CHECK(r.isApprox(expected, 1e-15));
}

TEST_CASE("quat_to_rotmat orthonormality for random unit quaternions") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Matrix3d r = quat_to_rotmat(random_quat(rng));
    CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("quat_to_rotmat double cover") {
  std::mt19937_64 rng(12);
  const Quat q = random_quat(rng);
  const Quat neg{-q.w, -q.x, -q.y, -q.z};
  CHECK(quat_to_rotmat(q).isApprox(quat_to_rotmat(neg), 1e-14));
}

TEST_CASE("quat_to_rotmat rejects non-finite input") {
  CHECK_THROWS_AS(quat_to_rotmat({std::nan(""), 0, 0, 0}), InvalidInputError);
}

TEST_CASE("quat_rotmat_jacobian matches finite differences") {
  std::mt19937_64 rng(13);
  const Quat q = random_quat(rng);
  const auto jac = quat_rotmat_jacobian(q);
  const double h = 1e-6;
  double coeffs[4] = {q.w, q.x, q.y, q.z};
  for (int k = 0; k < 4; ++k) {
    double plus[4] = {coeffs[0], coeffs[1], coeffs[2], coeffs[3]};
    double minus[4] = {coeffs[0], coeffs[1], coeffs[2], coeffs[3]};
    plus[k] += h;
    minus[k] -= h;
    const Eigen::Matrix3d fd = (quat_to_rotmat({plus[0], plus[1], plus[2], plus[3]}) -
                                quat_to_rotmat({minus[0], minus[1], minus[2], minus[3]})) /
                               (2 * h);
    CHECK((fd - jac[k]).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("world_to_camera identity pose") {
  const Eigen::Vector3d p(1, 2, 3);
  CHECK(world_to_camera(CameraPose::identity(), p).isApprox(p, 1e-15));
}

TEST_CASE("world_to_camera translation cancellation") {
  CameraPose pose;
  pose.t = {1, 0, 0};
  CHECK(world_to_camera(pose, {1, 0, 0}).norm() == doctest::Approx(0.0));
}

TEST_CASE("world_to_camera round trip via inverse transform") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 30; ++i) {
    CameraPose pose;
    pose.t = {u(rng), u(rng), u(rng)};
    pose.q = random_quat(rng);
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const Eigen::Vector3d back = camera_to_world(pose, world_to_camera(pose, p));
    CHECK((back - p).norm() < 1e-9);
  }
}

TEST_CASE("compose with inverse yields identity") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  CameraPose pose;
  pose.t = {u(rng), u(rng), u(rng)};
  pose.q = random_quat(rng);
  const CameraPose id = compose(pose, pose.inverse());
  CHECK(id.t.norm() < 1e-9);
  CHECK(quat_to_rotmat(id.q).isApprox(Eigen::Matrix3d::Identity(), 1e-9));
}

TEST_CASE("intrinsics validation") {
  CameraIntrinsics k = test_intrinsics();
  CHECK_NOTHROW(k.validate());
  k.fx = -1;
  CHECK_THROWS_AS(k.validate(), InvalidInputError);
  k = test_intrinsics();
  k.cx = k.width + 5;
  CHECK_THROWS_AS(k.validate(), InvalidInputError);
}

TEST_CASE("project_gaussian on the optical axis lands at the principal point") {
  const auto K = test_intrinsics(64, 48);
  const auto p = project_gaussian({0, 0, 2.0}, Eigen::Vector3d::Constant(0.05), Quat::identity(),
                                  CameraPose::identity(), K);
  REQUIRE(p.has_value());
  CHECK(p->mean_px.x() == doctest::Approx(K.cx));
  CHECK(p->mean_px.y() == doctest::Approx(K.cy));
  CHECK(p->depth == doctest::Approx(2.0));
}

TEST_CASE("project_gaussian culls behind the camera") {
  const auto K = test_intrinsics();
  CHECK_FALSE(project_gaussian({0, 0, -1.0}, Eigen::Vector3d::Constant(0.05), Quat::identity(),
                               CameraPose::identity(), K)
                  .has_value());
}

TEST_CASE("project_gaussian isotropic covariance matches pinhole first order") {
  const auto K = test_intrinsics(64, 64, 80.0);
  const double s = 0.03, z = 2.5;
  const auto p = project_gaussian({0, 0, z}, Eigen::Vector3d::Constant(s), Quat::identity(),
                                  CameraPose::identity(), K);
  REQUIRE(p.has_value());
  const double expected = (K.fx * s / z) * (K.fx * s / z);
  CHECK(p->cov_px(0, 0) - kCovarianceFloorPx2 == doctest::Approx(expected).epsilon(1e-6));
  CHECK(p->cov_px(1, 1) - kCovarianceFloorPx2 == doctest::Approx(expected).epsilon(1e-6));
}

// Independent oracle: sample the 3D Gaussian, project each sample exactly, and
// compare the sample covariance with the first-order EWA covariance.
TEST_CASE("project_gaussian covariance matches sampled projection") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto K = test_intrinsics(64, 64, 90.0);
  const Eigen::Vector3d mean(0.3, -0.2, 3.0);
  const Eigen::Vector3d scale(0.04, 0.02, 0.03);
  const Quat rot = random_quat(rng);
  const auto p =
      project_gaussian(mean, scale, rot, CameraPose::identity(), K);
  REQUIRE(p.has_value());

  const Eigen::Matrix3d r = quat_to_rotmat(rot);
  const int samples = 200000;
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  std::vector<Eigen::Vector2d> pts(samples);
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector3d local(n(rng) * scale.x(), n(rng) * scale.y(), n(rng) * scale.z());
    const Eigen::Vector3d w = mean + r * local;
    pts[i] = {K.fx * w.x() / w.z() + K.cx, K.fy * w.y() / w.z() + K.cy};
    mu += pts[i];
  }
  mu /= samples;
  for (const auto& pt : pts) cov += (pt - mu) * (pt - mu).transpose();
  cov /= samples - 1;

  const Eigen::Matrix2d analytic = p->cov_px - kCovarianceFloorPx2 * Eigen::Matrix2d::Identity();
  CHECK((analytic - cov).norm() / cov.norm() < 0.03);
}

TEST_CASE("project_gaussian translation equivariance in cx") {
  auto K = test_intrinsics();
  const Eigen::Vector3d mean(0.2, 0.1, 2.0);
  const auto a = project_gaussian(mean, Eigen::Vector3d::Constant(0.05), Quat::identity(),
                                  CameraPose::identity(), K);
  K.cx += 3.25;
  const auto b = project_gaussian(mean, Eigen::Vector3d::Constant(0.05), Quat::identity(),
                                  CameraPose::identity(), K);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(b->mean_px.x() - a->mean_px.x() == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("retained projections respect the covariance floor") {
  std::mt19937_64 rng(17);
  const auto K = test_intrinsics();
  const auto map = testing::random_scene(rng, 30, K);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& g = map.gaussian(i);
    const auto p = project_gaussian(g.position, g.scale(), g.rotation, CameraPose::identity(), K);
    if (!p) continue;
    // Smallest eigenvalue of the 2x2 covariance.
    const double mid = 0.5 * (p->cov_px(0, 0) + p->cov_px(1, 1));
    const double det = p->cov_px.determinant();
    const double lmin = mid - std::sqrt(std::max(0.0, mid * mid - det));
    CHECK(lmin >= kCovarianceFloorPx2 * 0.999);
    CHECK(p->depth > 0.0);
  }
}

TEST_CASE("project_gaussian_backward matches finite differences") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto K = test_intrinsics(48, 48, 60.0);

  CameraPose pose;
  pose.t = {0.1, -0.05, 0.02};
  pose.q = Quat{1.0, 0.02 * u(rng), 0.02 * u(rng), 0.02 * u(rng)}.normalized();

  const Eigen::Vector3d mean(0.2, -0.3, 2.2);
  const Eigen::Vector3d scale(0.08, 0.05, 0.11);
  const Quat rot = random_quat(rng);

  // Random upstream gradients contract the full Jacobian.
  const Eigen::Vector2d d_mean_px(u(rng), u(rng));
  Eigen::Matrix2d d_cov;
  const double c0 = u(rng), c1 = u(rng), c2 = u(rng);
  d_cov << c0, c1, c1, c2;
  const double d_depth = u(rng);

  const auto g =
      project_gaussian_backward(mean, scale, rot, pose, K, d_mean_px, d_cov, d_depth, true);

  const auto loss = [&](const Eigen::Vector3d& m, const Eigen::Vector3d& s, const Quat& r,
                        const CameraPose& ps) {
    const auto p = project_gaussian(m, s, r, ps, K);
    REQUIRE(p.has_value());
    return d_mean_px.dot(p->mean_px) + (d_cov.array() * p->cov_px.array()).sum() +
           d_depth * p->depth;
  };

  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d mp = mean, mm = mean;
    mp[k] += h;
    mm[k] -= h;
    CHECK(testing::grads_close(g.d_mean[k], (loss(mp, scale, rot, pose) - loss(mm, scale, rot, pose)) / (2 * h), 1e-5, 1e-9));
    Eigen::Vector3d sp = scale, sm = scale;
    sp[k] += h;
    sm[k] -= h;
    CHECK(testing::grads_close(g.d_scale[k], (loss(mean, sp, rot, pose) - loss(mean, sm, rot, pose)) / (2 * h), 1e-5, 1e-9));
    Eigen::Vector3d tp = pose.t, tm = pose.t;
    tp[k] += h;
    tm[k] -= h;
    CameraPose pp = pose, pm = pose;
    pp.t = tp;
    pm.t = tm;
    CHECK(testing::grads_close(g.d_t[k], (loss(mean, scale, rot, pp) - loss(mean, scale, rot, pm)) / (2 * h), 1e-5, 1e-9));
  }
  double rc[4] = {rot.w, rot.x, rot.y, rot.z};
  double qc[4] = {pose.q.w, pose.q.x, pose.q.y, pose.q.z};
  for (int k = 0; k < 4; ++k) {
    double rp[4] = {rc[0], rc[1], rc[2], rc[3]}, rm[4] = {rc[0], rc[1], rc[2], rc[3]};
    rp[k] += h;
    rm[k] -= h;
    CHECK(testing::grads_close(
        g.d_rot[k],
        (loss(mean, scale, {rp[0], rp[1], rp[2], rp[3]}, pose) -
         loss(mean, scale, {rm[0], rm[1], rm[2], rm[3]}, pose)) /
            (2 * h),
        1e-5, 1e-9));
    double qp[4] = {qc[0], qc[1], qc[2], qc[3]}, qm[4] = {qc[0], qc[1], qc[2], qc[3]};
    qp[k] += h;
    qm[k] -= h;
    CameraPose pp = pose, pm = pose;
    pp.q = {qp[0], qp[1], qp[2], qp[3]};
    pm.q = {qm[0], qm[1], qm[2], qm[3]};
    CHECK(testing::grads_close(g.d_q[k], (loss(mean, scale, rot, pp) - loss(mean, scale, rot, pm)) / (2 * h), 1e-5, 1e-9));
  }
}

}  // TEST_SUITE
