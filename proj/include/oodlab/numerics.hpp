#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace oodlab {

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/**
 * Seeded xoshiro256** generator.
 *
 * The state is expanded from (seed, label) with splitmix64, so a given pair
 * always yields the same sequence on every platform. Child streams derived
 * with substream() are keyed by their label and never share state with the
 * parent. Not safe to share between threads; hand each worker a substream.
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::string_view label = "root");

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1); never returns 0, safe to take a log of.
  double uniform_open();
  /// Uniform integer on [0, n).
  std::size_t below(std::size_t n);
  /// Standard normal, Marsaglia polar method.
  double normal();

  /// Independent generator keyed by (seed, this stream's key, label).
  Rng substream(std::string_view label) const;

  std::uint64_t seed() const noexcept { return seed_; }

private:
  Rng(std::uint64_t seed, std::uint64_t key);
  void init(std::uint64_t key);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t s_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Draw from N(mean, sigma^2 I). sigma == 0 returns mean.
std::vector<double> gaussian_sample(std::span<const double> mean, double sigma, Rng& rng);

/// Gamma(shape, 1) via Marsaglia-Tsang, with the U^(1/shape) boost for shape < 1.
double gamma_sample(double shape, Rng& rng);

/// log of a Gamma(shape, 1) draw. Stays finite for tiny shapes where the
/// direct draw underflows to zero.
double log_gamma_sample(double shape, Rng& rng);

/// Beta(a, b) as X/(X+Y), X ~ Gamma(a), Y ~ Gamma(b); evaluated in log space.
double beta_sample(double a, double b, Rng& rng);

// ---------------------------------------------------------------------------
// Dense matrices
// ---------------------------------------------------------------------------

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> v);

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  bool all_finite() const;
  bool operator==(const Matrix&) const = default;
};

/// Reference triple loop, kept for testing the parallel kernels.
Matrix matmul_serial(const Matrix& a, const Matrix& b);
/// C = A * B. Parallel over output rows; bit-identical to matmul_serial.
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A^T * B.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// C = A * B^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
/// Adds `bias` to every row.
void add_row_vector(Matrix& m, std::span<const double> bias);
Matrix relu(const Matrix& m);
/// Row-wise softmax, stabilized by subtracting the row max.
Matrix softmax_rows(const Matrix& m);
/// Column sums, i.e. 1^T * M.
std::vector<double> column_sums(const Matrix& m);

/// Stabilized log(sum(exp(x))).
double log_sum_exp(std::span<const double> x);
/// Stabilized softmax of one vector.
std::vector<double> softmax(std::span<const double> x);

/// Number of OpenMP threads the kernels will use (1 without OpenMP).
int kernel_threads();

}  // namespace oodlab
