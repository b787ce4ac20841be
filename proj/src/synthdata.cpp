#include "oodlab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "oodlab/error.hpp"

namespace oodlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point2 sample_component(const GmmSpec& spec, std::size_t c, Rng& rng) {
  const auto v = gaussian_sample(spec.means[c], spec.sigma, rng);
  return {v[0], v[1]};
}

void write_row(std::ostream& out, double x, double y, int label) {
  out << x << ',' << y << ',' << label << '\n';
}

struct CsvRow {
  double x, y;
  int label;
};

std::vector<CsvRow> read_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,label") throw InvalidInput("csv: expected header 'x,y,label'");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string fx, fy, fl;
    if (!std::getline(ss, fx, ',') || !std::getline(ss, fy, ',') || !std::getline(ss, fl))
      throw InvalidInput("csv: malformed row '" + line + "'");
    try {
      std::size_t px = 0, py = 0, pl = 0;
      CsvRow r{std::stod(fx, &px), std::stod(fy, &py), std::stoi(fl, &pl)};
      if (px != fx.size() || py != fy.size() || pl != fl.size()) throw InvalidInput("csv: trailing characters");
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw InvalidInput("csv: malformed row '" + line + "'");
    }
  }
  return rows;
}

}  // namespace

GmmSpec GmmSpec::ring(std::size_t k, double radius, double phase, double sigma) {
  if (k == 0) throw InvalidParameter("ring: need at least one component");
  GmmSpec spec;
  spec.sigma = sigma;
  for (std::size_t j = 0; j < k; ++j) {
    const double angle = kTwoPi * static_cast<double>(j) / static_cast<double>(k) + phase;
    spec.means.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  spec.weights.assign(k, 1.0 / static_cast<double>(k));
  spec.validate();
  return spec;
}

void GmmSpec::validate() const {
  if (means.empty()) throw InvalidParameter("GmmSpec: no components");
  if (weights.size() != means.size()) throw InvalidParameter("GmmSpec: weight count differs from component count");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidParameter("GmmSpec: sigma must be non-negative");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidParameter("GmmSpec: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidParameter("GmmSpec: weights must sum to 1");
}

GmmSpec id_spec(const IdGeometry& geo) {
  if (geo.num_classes < 2) throw InvalidParameter("ID data needs at least two classes");
  return GmmSpec::ring(geo.num_classes, geo.radius, 0.0, geo.sigma);
}

LabeledSet make_id_dataset(std::size_t n_per_class, Rng& rng, const IdGeometry& geo) {
  if (n_per_class == 0) throw InvalidParameter("make_id_dataset: n_per_class must be at least 1");
  const GmmSpec spec = id_spec(geo);
  const std::size_t k = geo.num_classes;
  LabeledSet set{Matrix(n_per_class * k, 2), {}, k};
  set.labels.reserve(n_per_class * k);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n_per_class; ++i)
    for (std::size_t c = 0; c < k; ++c, ++row) {
      const auto p = sample_component(spec, c, rng);
      set.points(row, 0) = p[0];
      set.points(row, 1) = p[1];
      set.labels.push_back(static_cast<int>(c));
    }
  return set;
}

OutlierSet make_aux_outliers(std::size_t k, std::size_t m, Rng& rng, const AuxGeometry& geo) {
  if (k == 0) throw InvalidParameter("make_aux_outliers: k must be at least 1");
  if (m < k) throw InvalidParameter("make_aux_outliers: need m >= k");
  OutlierSet set{Matrix(m, 2), k, GmmSpec::ring(k, geo.radius, geo.phase, geo.sigma), {}};
  set.components.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = rng.below(k);
    const auto p = sample_component(set.spec, c, rng);
    set.points(i, 0) = p[0];
    set.points(i, 1) = p[1];
    set.components.push_back(static_cast<int>(c));
  }
  return set;
}

OutlierSet make_test_ood(std::size_t m, Rng& rng, const TestOodGeometry& geo) {
  if (m == 0) throw InvalidParameter("make_test_ood: m must be at least 1");
  if (!(geo.ring_fraction >= 0.0 && geo.ring_fraction <= 1.0))
    throw InvalidParameter("make_test_ood: ring_fraction must be in [0, 1]");
  if (!(geo.far_inner > 0.0 && geo.far_outer > geo.far_inner))
    throw InvalidParameter("make_test_ood: far-field annulus needs 0 < inner < outer");
  OutlierSet set{Matrix(m, 2), geo.ring_components,
                 GmmSpec::ring(geo.ring_components, geo.ring_radius, geo.phase, geo.ring_sigma), {}};
  set.components.reserve(m);
  const double r2_in = geo.far_inner * geo.far_inner;
  const double r2_out = geo.far_outer * geo.far_outer;
  for (std::size_t i = 0; i < m; ++i) {
    Point2 p;
    int component;
    if (rng.uniform() < geo.ring_fraction) {
      const std::size_t c = rng.below(geo.ring_components);
      p = sample_component(set.spec, c, rng);
      component = static_cast<int>(c);
    } else {
      // Area-uniform in the annulus.
      const double r = std::sqrt(r2_in + rng.uniform() * (r2_out - r2_in));
      const double a = kTwoPi * rng.uniform();
      p = {r * std::cos(a), r * std::sin(a)};
      component = -1;
    }
    set.points(i, 0) = p[0];
    set.points(i, 1) = p[1];
    set.components.push_back(component);
  }
  return set;
}

double max_angular_gap(const Matrix& points) {
  if (points.rows == 0 || points.cols != 2) throw InvalidInput("max_angular_gap: need a non-empty n x 2 matrix");
  std::vector<double> angles(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i) angles[i] = std::atan2(points(i, 1), points(i, 0));
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + kTwoPi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap;
}

void write_csv(const LabeledSet& set, std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "x,y,label\n";
  for (std::size_t i = 0; i < set.points.rows; ++i) write_row(out, set.points(i, 0), set.points(i, 1), set.labels[i]);
}

void write_csv(const OutlierSet& set, std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "x,y,label\n";
  for (std::size_t i = 0; i < set.points.rows; ++i) write_row(out, set.points(i, 0), set.points(i, 1), -1);
}

LabeledSet read_labeled_csv(std::istream& in, std::size_t num_classes) {
  const auto rows = read_rows(in);
  LabeledSet set{Matrix(rows.size(), 2), {}, num_classes};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label < 0 || static_cast<std::size_t>(rows[i].label) >= num_classes)
      throw InvalidInput("csv: label out of range for a labeled set");
    set.points(i, 0) = rows[i].x;
    set.points(i, 1) = rows[i].y;
    set.labels.push_back(rows[i].label);
  }
  return set;
}

Matrix read_outlier_csv(std::istream& in) {
  const auto rows = read_rows(in);
  Matrix pts(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label != -1) throw InvalidInput("csv: outlier rows must carry label -1");
    pts(i, 0) = rows[i].x;
    pts(i, 1) = rows[i].y;
  }
  return pts;
}

}  // namespace oodlab
