#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "oodlab/numerics.hpp"

namespace oodlab {

enum class MixKind { none, vanilla, diversemix, cutmask };

std::string_view to_string(MixKind kind);
MixKind parse_mix_kind(std::string_view name);

/// How outlier pairs are interpolated.
struct MixStrategy {
  MixKind kind = MixKind::none;
  double alpha = 4.0;        // Beta concentration
  double temperature = 10.0; // diverseMix only

  void validate() const;
};

/// A mixed point and the interpolation weight that produced it.
struct MixedPoint {
  std::vector<double> point;
  double lambda = 1.0;
};

struct MixProvenance {
  std::size_t index_i = 0;  // row in the source batch
  std::size_t index_j = 0;  // partner row, after the shuffle
  double lambda = 1.0;
};

struct MixedBatch {
  Matrix points;
  std::vector<MixProvenance> provenance;
};

/// Temperature softmax over a pair of scores; returns (w_i, 1 - w_i).
std::pair<double, double> adaptive_weights(double s_i, double s_j, double temperature);

// `forced_lambda` bypasses the Beta draw; it exists for endpoint tests.

/// lambda ~ Beta(w_i * alpha, w_j * alpha) with (w_i, w_j) = adaptive_weights(s_i, s_j, T).
MixedPoint diversemix_pair(std::span<const double> x_i, std::span<const double> x_j, double s_i, double s_j,
                           const MixStrategy& strategy, Rng& rng, std::optional<double> forced_lambda = {});

/// lambda ~ Beta(alpha, alpha).
MixedPoint vanilla_mixup_pair(std::span<const double> x_i, std::span<const double> x_j, double alpha, Rng& rng,
                              std::optional<double> forced_lambda = {});

/// lambda ~ Beta(alpha, alpha); round(lambda * d) random coordinates come from x_i, the rest from x_j.
MixedPoint cutmask_pair(std::span<const double> x_i, std::span<const double> x_j, double alpha, Rng& rng,
                        std::optional<double> forced_lambda = {});

/// Shuffles a copy of the batch (scores follow the same permutation) and mixes
/// row t with shuffled row t. kind == none returns the batch with lambda = 1.
MixedBatch mix_batch(const Matrix& batch, std::span<const double> scores, const MixStrategy& strategy, Rng& rng);

}  // namespace oodlab
