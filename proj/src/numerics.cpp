#include "oodlab/numerics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "oodlab/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace oodlab {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a; labels are short so quality beyond mixing into splitmix is irrelevant.
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

// Rows at or above this count go through the OpenMP path.
constexpr std::size_t kParallelRowThreshold = 64;

}  // namespace

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

Rng::Rng(std::uint64_t seed, std::string_view label) : seed_(seed), key_(0) {
  init(combine(seed, hash_label(label)));
}

Rng::Rng(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(0) { init(key); }

void Rng::init(std::uint64_t key) {
  key_ = key;
  std::uint64_t sm = key;
  for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InvalidParameter("Rng::below: n must be positive");
  // Lemire's nearly-divisionless rejection.
  const std::uint64_t range = n;
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

Rng Rng::substream(std::string_view label) const {
  return Rng(seed_, combine(key_, hash_label(label)));
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

std::vector<double> gaussian_sample(std::span<const double> mean, double sigma, Rng& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidParameter("gaussian_sample: sigma must be non-negative and finite");
  std::vector<double> out(mean.begin(), mean.end());
  for (double& v : out) {
    if (!std::isfinite(v)) throw InvalidParameter("gaussian_sample: mean must be finite");
    const double z = rng.normal();
    if (sigma > 0.0) v += sigma * z;
  }
  return out;
}

namespace {

// Marsaglia-Tsang for shape >= 1, returning log of the draw.
double log_gamma_mt(double shape, Rng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

}  // namespace

double log_gamma_sample(double shape, Rng& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw InvalidParameter("gamma_sample: shape must be positive and finite");
  if (shape >= 1.0) return log_gamma_mt(shape, rng);
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  const double log_boost = std::log(rng.uniform_open()) / shape;
  return log_gamma_mt(shape + 1.0, rng) + log_boost;
}

double gamma_sample(double shape, Rng& rng) { return std::exp(log_gamma_sample(shape, rng)); }

double beta_sample(double a, double b, Rng& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidParameter("beta_sample: parameters must be positive and finite");
  const double lx = log_gamma_sample(a, rng);
  const double ly = log_gamma_sample(b, rng);
  // X / (X + Y) = 1 / (1 + exp(ly - lx))
  const double r = 1.0 / (1.0 + std::exp(ly - lx));
  return std::clamp(r, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) throw ShapeError("Matrix: value count does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  return c;
}

// The parallel kernels keep the serial summation order per output element, so
// results are bit-identical regardless of thread count.
Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
  const std::size_t inner = a.cols;
  const std::size_t out = b.cols;
#pragma omp parallel for schedule(static) if (a.rows >= kParallelRowThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* arow = a.values.data() + i * inner;
    double* crow = c.values.data() + i * out;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      const double* brow = b.values.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw ShapeError("matmul_tn: row counts differ");
  Matrix c(a.cols, b.cols);
  const auto n = static_cast<std::ptrdiff_t>(a.cols);
#pragma omp parallel for schedule(static) if (a.cols >= kParallelRowThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double* crow = c.values.data() + i * b.cols;
    for (std::size_t k = 0; k < a.rows; ++k) {
      const double aki = a(k, static_cast<std::size_t>(i));
      const double* brow = b.values.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ShapeError("matmul_nt: column counts differ");
  Matrix c(a.rows, b.rows);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows >= kParallelRowThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* arow = a.values.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.values.data() + j * b.cols;
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
      c(static_cast<std::size_t>(i), j) = sum;
    }
  }
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("add: shapes differ");
  Matrix c = a;
  for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] += b.values[i];
  return c;
}

void add_row_vector(Matrix& m, std::span<const double> bias) {
  if (bias.size() != m.cols) throw ShapeError("add_row_vector: bias length differs from column count");
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += bias[c];
  }
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto p = softmax(m.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) s[c] += row[c];
  }
  return s;
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> p(x.size());
  if (x.empty()) return p;
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace oodlab
