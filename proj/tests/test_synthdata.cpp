#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "oodlab/error.hpp"
#include "oodlab/synthdata.hpp"

using namespace oodlab;

namespace {

double dist(const Point2& a, double x, double y) { return std::hypot(a[0] - x, a[1] - y); }
double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

TEST_CASE("ring spec: equally spaced with equal weights") {
  const GmmSpec g = GmmSpec::ring(4, 6.0, 0.0, 0.3);
  REQUIRE(g.means.size() == 4);
  CHECK(g.means[0][0] == doctest::Approx(6.0));
  CHECK(g.means[1][1] == doctest::Approx(6.0));
  CHECK(g.means[2][0] == doctest::Approx(-6.0));
  CHECK(g.means[3][1] == doctest::Approx(-6.0));
  for (double w : g.weights) CHECK(w == 0.25);
  CHECK_NOTHROW(g.validate());
}

TEST_CASE("GmmSpec::validate rejects bad mixtures") {
  GmmSpec g = GmmSpec::ring(3, 1.0, 0.0, 0.3);
  g.weights[0] += 1e-9;
  CHECK_THROWS_AS(g.validate(), InvalidParameter);
  GmmSpec empty;
  CHECK_THROWS_AS(empty.validate(), InvalidParameter);
  GmmSpec neg = GmmSpec::ring(3, 1.0, 0.0, 0.3);
  neg.sigma = -0.1;
  CHECK_THROWS_AS(neg.validate(), InvalidParameter);
}

TEST_CASE("make_id_dataset: degenerate sigma puts points on the class centers") {
  Rng rng(1);
  const IdGeometry geo{3, 2.0, 0.0};
  const LabeledSet s = make_id_dataset(1, rng, geo);
  REQUIRE(s.points.rows == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const int c = s.labels[i];
    const double angle = 2.0 * std::numbers::pi * c / 3.0;
    CHECK(s.points(i, 0) == doctest::Approx(2.0 * std::cos(angle)).epsilon(1e-15));
    CHECK(s.points(i, 1) == doctest::Approx(2.0 * std::sin(angle)).epsilon(1e-15));
  }
  CHECK(s.num_classes == 3);
}

TEST_CASE("make_id_dataset: class means within the CLT bound, labels balanced") {
  Rng rng(2, "id");
  const LabeledSet s = make_id_dataset(500, rng);
  REQUIRE(s.points.rows == 1500);
  const GmmSpec spec = id_spec();
  for (int c = 0; c < 3; ++c) {
    double mx = 0.0, my = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < s.points.rows; ++i)
      if (s.labels[i] == c) {
        mx += s.points(i, 0);
        my += s.points(i, 1);
        ++n;
      }
    CHECK(n == 500);
    const double bound = 3.0 * 0.3 / std::sqrt(500.0);
    CHECK(std::abs(mx / n - spec.means[c][0]) < bound);
    CHECK(std::abs(my / n - spec.means[c][1]) < bound);
  }
}

TEST_CASE("make_id_dataset: determinism and errors") {
  Rng a(3), b(3);
  const LabeledSet x = make_id_dataset(20, a), y = make_id_dataset(20, b);
  CHECK(x.points == y.points);
  CHECK(x.labels == y.labels);
  CHECK_THROWS_AS(make_id_dataset(0, a), InvalidParameter);
}

TEST_CASE("make_aux_outliers: single component at sigma 0") {
  Rng rng(4);
  const OutlierSet s = make_aux_outliers(1, 10, rng, AuxGeometry{6.0, 0.0, 0.0});
  REQUIRE(s.points.rows == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(s.points(i, 0) == 6.0);
    CHECK(s.points(i, 1) == 0.0);
  }
  CHECK(s.component_count == 1);
}

TEST_CASE("make_aux_outliers: multinomial component counts at k = 4") {
  Rng rng(5, "aux");
  const OutlierSet s = make_aux_outliers(4, 10000, rng);
  std::vector<int> counts(4, 0);
  for (int c : s.components) ++counts[static_cast<std::size_t>(c)];
  for (int c : counts) CHECK(std::abs(c - 2500) <= 150);
}

TEST_CASE("make_aux_outliers: points come from their recorded component") {
  Rng rng(6);
  const AuxGeometry geo{6.0, 0.3, 0.0};
  const OutlierSet s = make_aux_outliers(10, 2000, rng, geo);
  for (std::size_t i = 0; i < s.points.rows; ++i) {
    const auto& mu = s.spec.means[static_cast<std::size_t>(s.components[i])];
    // 6 sigma in each coordinate is far beyond anything 2000 draws should reach.
    REQUIRE(std::abs(s.points(i, 0) - mu[0]) < 6 * 0.3);
    REQUIRE(std::abs(s.points(i, 1) - mu[1]) < 6 * 0.3);
  }
  CHECK_THROWS_AS(make_aux_outliers(10, 9, rng), InvalidParameter);
  CHECK_THROWS_AS(make_aux_outliers(0, 9, rng), InvalidParameter);
}

TEST_CASE("make_aux_outliers: more components cover the ring more evenly") {
  Rng a(7, "a"), b(7, "b");
  const OutlierSet few = make_aux_outliers(10, 5000, a);
  const OutlierSet many = make_aux_outliers(1000, 5000, b);
  CHECK(max_angular_gap(many.points) < max_angular_gap(few.points));
}

TEST_CASE("max_angular_gap: hand examples") {
  const Matrix four(4, 2, {1, 0, 0, 1, -1, 0, 0, -1});
  CHECK(max_angular_gap(four) == doctest::Approx(std::numbers::pi / 2));
  const Matrix one(1, 2, {1, 1});
  CHECK(max_angular_gap(one) == doctest::Approx(2 * std::numbers::pi));
}

TEST_CASE("make_test_ood: ring and far-field structure") {
  Rng rng(8);
  const TestOodGeometry geo{};
  const OutlierSet s = make_test_ood(4000, rng, geo);
  REQUIRE(s.points.rows == 4000);
  std::size_t far = 0;
  for (std::size_t i = 0; i < s.points.rows; ++i) {
    const double r = std::hypot(s.points(i, 0), s.points(i, 1));
    if (s.components[i] < 0) {
      ++far;
      CHECK(r >= geo.far_inner);
      CHECK(r <= geo.far_outer);
    }
  }
  // Binomial(4000, 0.5): sd ~ 31.6.
  CHECK(std::abs(static_cast<double>(far) - 2000.0) < 5 * 31.7);
  CHECK_THROWS_AS(make_test_ood(0, rng), InvalidParameter);
  Rng x(9), y(9);
  CHECK(make_test_ood(50, x).points == make_test_ood(50, y).points);
}

TEST_CASE("make_test_ood: far-field radii are area-uniform") {
  Rng rng(10);
  TestOodGeometry geo{};
  geo.ring_fraction = 0.0;
  const OutlierSet s = make_test_ood(20000, rng, geo);
  // P(r < 10) for an area-uniform annulus [8, 12] is (100 - 64) / (144 - 64) = 0.45.
  std::size_t inner = 0;
  for (std::size_t i = 0; i < s.points.rows; ++i) inner += std::hypot(s.points(i, 0), s.points(i, 1)) < 10.0;
  const double p = static_cast<double>(inner) / 20000.0;
  CHECK(std::abs(p - 0.45) < 4 * std::sqrt(0.45 * 0.55 / 20000.0));
}

TEST_CASE("make_test_ood: points keep their distance from the ID centers") {
  Rng rng(11);
  const OutlierSet s = make_test_ood(5000, rng);
  const GmmSpec id = id_spec();
  // Ring points sit 6 from the origin and at least 4 from any ID center;
  // three sigma of slack keeps the bound per point at ~0.997.
  const double bound = 6.0 - 2.0 - 3.0 * 0.3;
  std::size_t close = 0;
  for (std::size_t i = 0; i < s.points.rows; ++i)
    for (const auto& c : id.means) close += dist(c, s.points(i, 0), s.points(i, 1)) < bound;
  CHECK(static_cast<double>(close) / static_cast<double>(s.points.rows) <= 0.003);
}

TEST_CASE("geometry: ID centers sit at least 3 from every outlier component") {
  const GmmSpec id = id_spec();
  for (std::size_t k : {1, 10, 1000}) {
    const GmmSpec aux = GmmSpec::ring(k, 6.0, 0.0, 0.3);
    for (const auto& a : aux.means)
      for (const auto& c : id.means) CHECK(dist(a, c) >= 3.0);
  }
  const TestOodGeometry t{};
  const GmmSpec test = GmmSpec::ring(t.ring_components, t.ring_radius, t.phase, t.ring_sigma);
  for (const auto& a : test.means)
    for (const auto& c : id.means) CHECK(dist(a, c) >= 3.0);
}

TEST_CASE("geometry: test ring centers never coincide with auxiliary centers") {
  const TestOodGeometry t{};
  const GmmSpec test = GmmSpec::ring(t.ring_components, t.ring_radius, t.phase, t.ring_sigma);
  for (std::size_t k : {1, 10, 100, 1000}) {
    const GmmSpec aux = GmmSpec::ring(k, 6.0, 0.0, 0.3);
    double closest = INFINITY;
    for (const auto& a : aux.means)
      for (const auto& b : test.means) closest = std::min(closest, dist(a, b));
    CAPTURE(k);
    CHECK(closest > 1e-3);
  }
}

TEST_CASE("csv: labeled and outlier round trips") {
  Rng rng(12);
  const LabeledSet s = make_id_dataset(5, rng);
  std::stringstream ss;
  write_csv(s, ss);
  CHECK(ss.str().rfind("x,y,label\n", 0) == 0);
  const LabeledSet back = read_labeled_csv(ss, 3);
  CHECK(back.points == s.points);
  CHECK(back.labels == s.labels);

  const OutlierSet o = make_aux_outliers(3, 7, rng);
  std::stringstream os;
  write_csv(o, os);
  CHECK(read_outlier_csv(os) == o.points);

  std::stringstream wrong_kind;
  write_csv(o, wrong_kind);
  CHECK_THROWS_AS(read_labeled_csv(wrong_kind, 3), InvalidInput);
  std::stringstream no_header("1,2,0\n");
  CHECK_THROWS_AS(read_labeled_csv(no_header, 3), InvalidInput);
  std::stringstream junk("x,y,label\n1,abc,0\n");
  CHECK_THROWS_AS(read_labeled_csv(junk, 3), InvalidInput);
}
