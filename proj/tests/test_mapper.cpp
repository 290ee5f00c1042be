#include <doctest.h>

#include <random>

#include "splat/mapper.hpp"
#include "splat/metrics.hpp"
#include "splat/synthetic.hpp"
#include "support/test_util.hpp"

using namespace splat;
using testing::test_intrinsics;

namespace {

RenderOutput fake_render(int w, int h, double opacity, const Eigen::Vector3d& color,
                         double depth) {
  RenderOutput out;
  out.color = ImageD(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = color[c];
  out.depth = ImageD(w, h, 1, depth);
  out.opacity = ImageD(w, h, 1, opacity);
  return out;
}

FrameObservation flat_frame(int w, int h, const Eigen::Vector3d& color, double depth) {
  FrameObservation f;
  f.rgb = ImageD(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) f.rgb.at(y, x, c) = color[c];
  f.depth = ImageD(w, h, 1, depth);
  return f;
}

}  // namespace

TEST_SUITE("mapper") {

TEST_CASE("empty-map render densifies everywhere as holes") {
  const auto render_out = fake_render(8, 8, 0.0, {0, 0, 0}, 0.0);
  const auto frame = flat_frame(8, 8, {0.5, 0.5, 0.5}, 2.0);
  const auto m = densify_mask(render_out, frame, {});
  CHECK(m.count == 64);
  for (const auto v : m.reason.data)
    CHECK(v == static_cast<std::uint8_t>(DensifyReason::hole));
}

TEST_CASE("perfect opaque render produces an empty mask") {
  const auto render_out = fake_render(8, 8, 1.0, {0.5, 0.5, 0.5}, 2.0);
  const auto frame = flat_frame(8, 8, {0.5, 0.5, 0.5}, 2.0);
  CHECK(densify_mask(render_out, frame, {}).count == 0);
}

TEST_CASE("covered pixel with large color error is flagged color_error") {
  const auto render_out = fake_render(4, 4, 0.9, {0.1, 0.1, 0.1}, 2.0);
  const auto frame = flat_frame(4, 4, {0.6, 0.1, 0.1}, 2.0);
  const auto m = densify_mask(render_out, frame, {});
  CHECK(m.count == 16);
  CHECK(m.reason.at(0, 0) == static_cast<std::uint8_t>(DensifyReason::color_error));
}

TEST_CASE("relative depth error is flagged only where the sensor saw depth") {
  auto render_out = fake_render(4, 4, 0.9, {0.5, 0.5, 0.5}, 2.3);
  auto frame = flat_frame(4, 4, {0.5, 0.5, 0.5}, 2.0);  // 15% error > 5%
  frame.depth.at(1, 1) = 0.0;                           // invalid sensor pixel
  const auto m = densify_mask(render_out, frame, {});
  CHECK(m.count == 15);
  CHECK(m.mask.at(1, 1) == 0);
  CHECK(m.reason.at(0, 0) == static_cast<std::uint8_t>(DensifyReason::depth_error));
}

TEST_CASE("error conditions are ignored when error densification is off") {
  const auto render_out = fake_render(4, 4, 0.9, {0.1, 0.1, 0.1}, 3.0);
  const auto frame = flat_frame(4, 4, {0.9, 0.1, 0.1}, 2.0);
  CHECK(densify_mask(render_out, frame, {}, false).count == 0);
}

TEST_CASE("densify mask is monotone in tau_opa") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RenderOutput render_out = fake_render(8, 8, 0.0, {0.4, 0.4, 0.4}, 2.0);
  for (auto& v : render_out.opacity.data) v = u(rng);
  const auto frame = flat_frame(8, 8, {0.4, 0.4, 0.4}, 2.0);
  DensifyThresholds lo, hi;
  lo.tau_opa = 0.3;
  hi.tau_opa = 0.8;
  const auto m_lo = densify_mask(render_out, frame, lo);
  const auto m_hi = densify_mask(render_out, frame, hi);
  for (std::size_t i = 0; i < m_lo.mask.data.size(); ++i)
    if (m_lo.mask.data[i]) CHECK(m_hi.mask.data[i]);
}

TEST_CASE("seed at the principal point back-projects along the optical axis") {
  const auto K = test_intrinsics(32, 32);  // integer principal point (16, 16)
  DensifyMask mask;
  mask.mask = MaskImage::zeros(32, 32, 1);
  mask.mask.at(16, 16) = 1;
  auto frame = flat_frame(32, 32, {0.5, 0.2, 0.1}, 0.0);
  frame.depth.at(16, 16) = 1.7;
  const auto seeds = seed_from_depth(mask, frame, CameraPose::identity(), K, 1);
  REQUIRE(seeds.size() == 1);
  CHECK(seeds[0].position.isApprox(Eigen::Vector3d(0.0, 0.0, 1.7), 1e-12));
  CHECK(seeds[0].color.isApprox(Eigen::Vector3d(0.5, 0.2, 0.1)));
  CHECK(seeds[0].scale.x() == doctest::Approx(1.7 / K.fx));
}

TEST_CASE("empty mask seeds nothing") {
  const auto K = test_intrinsics();
  DensifyMask mask;
  mask.mask = MaskImage::zeros(K.width, K.height, 1);
  const auto frame = flat_frame(K.width, K.height, {0.5, 0.5, 0.5}, 2.0);
  CHECK(seed_from_depth(mask, frame, CameraPose::identity(), K, 2).empty());
}

TEST_CASE("seeds reproject onto their source pixels") {
  std::mt19937_64 rng(72);
  std::uniform_real_distribution<double> u(0.5, 4.0);
  const auto K = test_intrinsics(32, 32);
  CameraPose pose;
  pose.t = {0.2, -0.1, 0.05};
  pose.q = Quat{1, 0.05, -0.03, 0.02}.normalized();

  DensifyMask mask;
  mask.mask = MaskImage(32, 32, 1, 1);
  FrameObservation frame = flat_frame(32, 32, {0.5, 0.5, 0.5}, 0.0);
  for (auto& v : frame.depth.data) v = u(rng);

  const auto seeds = seed_from_depth(mask, frame, pose, K, 3);
  REQUIRE(!seeds.empty());
  std::size_t idx = 0;
  for (int y = 0; y < 32; y += 3) {
    for (int x = 0; x < 32; x += 3) {
      const auto& s = seeds[idx++];
      const Eigen::Vector3d p_cam = world_to_camera(pose, s.position);
      const double u_px = K.fx * p_cam.x() / p_cam.z() + K.cx;
      const double v_px = K.fy * p_cam.y() / p_cam.z() + K.cy;
      CHECK(std::abs(u_px - x) < 0.5);
      CHECK(std::abs(v_px - y) < 0.5);
    }
  }
}

TEST_CASE("map_frame with zero weights and zero iterations only grows the map") {
  SyntheticSpec spec;
  spec.frames = 1;
  spec.width = 32;
  spec.height = 32;
  spec.clutter = 2;
  const auto data = generate_synthetic(spec);

  GaussianMap map;
  MapOptimizer opt;
  MappingConfig config;
  config.iterations = 0;
  config.loss_weights.lambda_color = 0.0;
  config.loss_weights.lambda_depth = 0.0;
  config.loss_weights.lambda_ssim = 0.0;
  const auto report = map_frame(map, opt, data.frames[0], data.trajectory.poses[0],
                                data.intrinsics, config, {}, 3.0, true);
  CHECK(report.gaussians_added > 0);
  CHECK(map.size() == static_cast<std::size_t>(report.gaussians_added));
  for (std::size_t i = 0; i < map.size(); ++i)
    CHECK(map.gaussian(i).opacity() == doctest::Approx(config.initial_opacity));
  CHECK(map.importance(0).seen_count == 0);  // no iterations, no update
}

TEST_CASE("map_frame fits a frame and fills its holes") {
  SyntheticSpec spec;
  spec.frames = 1;
  spec.width = 32;
  spec.height = 32;
  spec.clutter = 3;
  spec.seed = 5;
  const auto data = generate_synthetic(spec);

  GaussianMap map;
  MapOptimizer opt;
  MappingConfig config;
  config.iterations = 40;
  config.first_frame_iteration_factor = 2;
  const auto report = map_frame(map, opt, data.frames[0], data.trajectory.poses[0],
                                data.intrinsics, config, {}, 3.0, true);
  CHECK(report.gaussians_added > 500);
  CHECK(report.psnr_db > 22.0);

  // Holes are filled: the re-rendered opacity clears tau_opa where depth was seen.
  const auto out = render(map, data.trajectory.poses[0], data.intrinsics, {});
  int holes = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (data.frames[0].depth.at(y, x) > 0 &&
          out.opacity.at(y, x) < config.thresholds.tau_opa)
        ++holes;
  CHECK(holes < 32 * 32 / 100);

  // Touched Gaussians picked up importance once.
  std::int64_t seen_once = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map.importance(i).seen_count == 1) ++seen_once;
  CHECK(seen_once > 0);

  // Re-mapping the same frame adds almost nothing.
  MapFrameReport second = map_frame(map, opt, data.frames[0], data.trajectory.poses[0],
                                    data.intrinsics, config, {}, 3.0, false);
  CHECK(second.gaussians_added < report.gaussians_added / 20);
}

}  // TEST_SUITE
