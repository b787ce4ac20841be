#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "oodlab/numerics.hpp"

namespace oodlab {

using Point2 = std::array<double, 2>;

/// Isotropic Gaussian mixture in the plane with a shared sigma.
struct GmmSpec {
  std::vector<Point2> means;
  double sigma = 0.3;
  std::vector<double> weights;

  /// Equal-weight mixture of `k` components spaced evenly on a circle.
  static GmmSpec ring(std::size_t k, double radius, double phase, double sigma);

  /// Throws InvalidParameter unless weights sum to 1, sigma >= 0 and there is
  /// at least one component.
  void validate() const;
};

/// ID training or test data: points with integer labels in [0, K).
struct LabeledSet {
  Matrix points;
  std::vector<int> labels;
  std::size_t num_classes = 0;
};

/// Unlabeled outliers plus the mixture they were drawn from.
struct OutlierSet {
  Matrix points;
  std::size_t component_count = 0;
  GmmSpec spec;
  std::vector<int> components;  // generating component per point; never used for training
};

struct IdGeometry {
  std::size_t num_classes = 3;
  double radius = 2.0;
  double sigma = 0.3;
};

struct AuxGeometry {
  double radius = 6.0;
  double sigma = 0.3;
  double phase = 0.0;
};

/// Held-out OOD: a ring of `ring_components` Gaussians interleaved with the
/// auxiliary ones, plus a uniform far-field annulus.
struct TestOodGeometry {
  std::size_t ring_components = 1000;
  double ring_radius = 6.0;
  double ring_sigma = 0.3;
  double phase = std::numbers::pi / 1000.0;
  double far_inner = 8.0;
  double far_outer = 12.0;
  double ring_fraction = 0.5;
};

GmmSpec id_spec(const IdGeometry& geo = {});

LabeledSet make_id_dataset(std::size_t n_per_class, Rng& rng, const IdGeometry& geo = {});

/// `m` points from a k-component ring; component counts follow a multinomial draw.
OutlierSet make_aux_outliers(std::size_t k, std::size_t m, Rng& rng, const AuxGeometry& geo = {});

/// Mixture of held-out ring points and far-field annulus points.
/// Far-field points are recorded with component index -1.
OutlierSet make_test_ood(std::size_t m, Rng& rng, const TestOodGeometry& geo = {});

/// Largest angular gap (radians) between consecutive sample angles on the circle.
double max_angular_gap(const Matrix& points);

// CSV with header `x,y,label`; outliers are written with label -1.
void write_csv(const LabeledSet& set, std::ostream& out);
void write_csv(const OutlierSet& set, std::ostream& out);
/// Reads `x,y,label`. Rows with label -1 are rejected; use read_outlier_csv.
LabeledSet read_labeled_csv(std::istream& in, std::size_t num_classes);
/// Reads `x,y,label` where every label is -1. Provenance spec is left empty.
Matrix read_outlier_csv(std::istream& in);

}  // namespace oodlab
