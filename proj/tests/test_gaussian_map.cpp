#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "splat/errors.hpp"
#include "splat/gaussian_map.hpp"
#include "splat/losses.hpp"
#include "support/test_util.hpp"

using namespace splat;

namespace {

GaussianSeed basic_seed() {
  GaussianSeed s;
  s.position = {0, 0, 2};
  s.scale = Eigen::Vector3d::Constant(0.1);
  s.color = {0.5, 0.2, 0.8};
  s.opacity = 0.5;
  return s;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("gaussian_map") {

TEST_CASE("insert into empty map returns range and grows") {
  GaussianMap map;
  std::vector<GaussianSeed> seeds(3, basic_seed());
  const IndexRange r = map.insert_gaussians(seeds);
  CHECK(r.begin == 0);
  CHECK(r.end == 3);
  CHECK(map.size() == 3);
}

TEST_CASE("insert zero seeds is a no-op") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const IndexRange r = map.insert_gaussians(std::vector<GaussianSeed>{});
  CHECK(r.count() == 0);
  CHECK(map.size() == 1);
}

TEST_CASE("insert rejects invariant-violating seeds") {
  GaussianMap map;
  auto bad_opacity = basic_seed();
  bad_opacity.opacity = 1.5;
  CHECK_THROWS_AS(map.insert_gaussians(std::vector<GaussianSeed>{bad_opacity}),
                  InvalidInputError);
  auto bad_scale = basic_seed();
  bad_scale.scale = {0.1, -0.1, 0.1};
  CHECK_THROWS_AS(map.insert_gaussians(std::vector<GaussianSeed>{bad_scale}), InvalidInputError);
  auto bad_color = basic_seed();
  bad_color.color = {1.2, 0, 0};
  CHECK_THROWS_AS(map.insert_gaussians(std::vector<GaussianSeed>{bad_color}), InvalidInputError);
  CHECK(map.size() == 0);
}

TEST_CASE("exposed accessors satisfy invariants") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const Gaussian& g = map.gaussian(0);
  CHECK((g.scale().array() > 0).all());
  CHECK(g.opacity() > 0.0);
  CHECK(g.opacity() < 1.0);
  CHECK(g.rotation.norm() == doctest::Approx(1.0));
}

TEST_CASE("importance single update divides by one") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const std::size_t idx[] = {0};
  const ImportanceSample s[] = {{{0.5, -0.25, 0.0}, {1.0, 0.0, 0.0}, -2.0}};
  map.update_importance(idx, s);
  const auto w = map.importance_weights(0);
  CHECK(w.scale.isApprox(Eigen::Vector3d(0.5, 0.25, 0.0)));
  CHECK(w.color.isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
  CHECK(w.depth == doctest::Approx(2.0));
}

TEST_CASE("importance averages two updates") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const std::size_t idx[] = {0};
  const ImportanceSample s1[] = {{{1.0, 0, 0}, {0, 0, 0}, 0}};
  const ImportanceSample s2[] = {{{3.0, 0, 0}, {0, 0, 0}, 0}};
  map.update_importance(idx, s1);
  map.update_importance(idx, s2);
  CHECK(map.importance_weights(0).scale.x() == doctest::Approx(2.0));
}

TEST_CASE("untouched Gaussians keep zero importance") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed(), basic_seed()});
  const std::size_t idx[] = {0};
  const ImportanceSample s[] = {{{1, 1, 1}, {1, 1, 1}, 1}};
  map.update_importance(idx, s);
  CHECK(map.importance(1).seen_count == 0);
  const auto w = map.importance_weights(1);
  CHECK(w.scale.isZero());
  CHECK(w.color.isZero());
  CHECK(w.depth == 0.0);
}

TEST_CASE("importance update rejects out-of-range indices") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const std::size_t idx[] = {5};
  const ImportanceSample s[] = {{}};
  CHECK_THROWS_AS(map.update_importance(idx, s), InternalError);
}

TEST_CASE("importance weights equal the mean of a logged gradient history") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  Eigen::Vector3d scale_abs_sum = Eigen::Vector3d::Zero();
  const int updates = 17;
  for (int i = 0; i < updates; ++i) {
    const std::size_t idx[] = {0};
    const ImportanceSample s[] = {{{u(rng), u(rng), u(rng)}, {u(rng), 0, 0}, u(rng)}};
    scale_abs_sum += s[0].scale.cwiseAbs();
    map.update_importance(idx, s);
  }
  CHECK(map.importance_weights(0).scale.isApprox(scale_abs_sum / updates, 1e-12));
}

TEST_CASE("importance weights are order independent") {
  const ImportanceSample samples[] = {{{1, 0, 0}, {0.5, 0, 0}, 2.0},
                                      {{-2, 1, 0}, {0.25, 0, 0}, -1.0},
                                      {{0.5, -3, 1}, {0, 1, 0}, 0.5}};
  GaussianMap fwd, rev;
  fwd.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  rev.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  for (int i = 0; i < 3; ++i) {
    const std::size_t idx[] = {0};
    const ImportanceSample a[] = {samples[i]};
    const ImportanceSample b[] = {samples[2 - i]};
    fwd.update_importance(idx, a);
    rev.update_importance(idx, b);
  }
  CHECK(fwd.importance_weights(0).scale.isApprox(rev.importance_weights(0).scale, 1e-15));
  CHECK(fwd.importance_weights(0).depth == doctest::Approx(rev.importance_weights(0).depth));
}

TEST_CASE("regularization is zero right after a snapshot") {
  std::mt19937_64 rng(22);
  auto K = testing::test_intrinsics();
  GaussianMap map = testing::random_scene(rng, 5, K);
  const std::size_t idx[] = {0, 1, 2, 3, 4};
  std::vector<ImportanceSample> s(5, {{1, 1, 1}, {1, 1, 1}, 1});
  map.update_importance(idx, s);
  map.snapshot_anchors(CameraPose::identity());
  const std::size_t touched[] = {0, 1, 2, 3, 4};
  CHECK(regularization_loss(map, touched, CameraPose::identity()).value == doctest::Approx(0.0));
}

TEST_CASE("regularization charges a color change by its weight") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const std::size_t idx[] = {0};
  const ImportanceSample s[] = {{{0, 0, 0}, {1, 1, 1}, 0}};
  map.update_importance(idx, s);
  map.snapshot_anchors(CameraPose::identity());
  map.gaussian(0).color.x() += 0.1;
  const std::size_t touched[] = {0};
  const auto reg = regularization_loss(map, touched, CameraPose::identity());
  CHECK(reg.value == doctest::Approx(0.1));
}

TEST_CASE("snapshot tolerates Gaussians behind the camera") {
  GaussianMap map;
  auto seed = basic_seed();
  seed.position = {0, 0, -3};
  map.insert_gaussians(std::vector<GaussianSeed>{seed});
  CHECK_NOTHROW(map.snapshot_anchors(CameraPose::identity()));
  CHECK(map.anchor(0).depth_ref == doctest::Approx(-3.0));
}

TEST_CASE("new gaussians have exactly zero importance weights") {
  std::mt19937_64 rng(23);
  auto K = testing::test_intrinsics();
  GaussianMap map = testing::random_scene(rng, 10, K);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto w = map.importance_weights(i);
    CHECK(w.scale.isZero(0.0));
    CHECK(w.color.isZero(0.0));
    CHECK(w.depth == 0.0);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  std::mt19937_64 rng(24);
  auto K = testing::test_intrinsics();
  GaussianMap map = testing::random_scene(rng, 25, K);
  const auto path = temp_path("splat_map_roundtrip.bin");
  map.save_checkpoint(path);
  const GaussianMap loaded = GaussianMap::load_checkpoint(path);
  REQUIRE(loaded.size() == map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& a = map.gaussian(i);
    const auto& b = loaded.gaussian(i);
    CHECK(a.position == b.position);
    CHECK(a.log_scale == b.log_scale);
    CHECK(a.color == b.color);
    CHECK(a.opacity_logit == b.opacity_logit);
    CHECK(a.rotation.w == b.rotation.w);
    CHECK(a.rotation.x == b.rotation.x);
    CHECK(a.rotation.y == b.rotation.y);
    CHECK(a.rotation.z == b.rotation.z);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects bad magic") {
  const auto path = temp_path("splat_bad_magic.bin");
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(GaussianMap::load_checkpoint(path), InvalidInputError);
  std::filesystem::remove(path);
}

TEST_CASE("point cloud export writes a PLY header") {
  GaussianMap map;
  map.insert_gaussians(std::vector<GaussianSeed>{basic_seed()});
  const auto path = temp_path("splat_cloud.ply");
  map.export_point_cloud(path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "ply");
  std::filesystem::remove(path);
}

}  // TEST_SUITE
