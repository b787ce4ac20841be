#include "oodlab/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oodlab/error.hpp"

namespace oodlab {

std::string_view to_string(MixKind kind) {
  switch (kind) {
    case MixKind::none: return "none";
    case MixKind::vanilla: return "vanilla";
    case MixKind::diversemix: return "diversemix";
    case MixKind::cutmask: return "cutmask";
  }
  return "?";
}

MixKind parse_mix_kind(std::string_view name) {
  if (name == "none") return MixKind::none;
  if (name == "vanilla") return MixKind::vanilla;
  if (name == "diversemix") return MixKind::diversemix;
  if (name == "cutmask") return MixKind::cutmask;
  throw ConfigError("unknown mix kind '" + std::string(name) + "'");
}

void MixStrategy::validate() const {
  if (kind == MixKind::none) return;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("mix strategy: alpha must be positive");
  if (kind == MixKind::diversemix && (!(temperature > 0.0) || !std::isfinite(temperature)))
    throw InvalidParameter("mix strategy: temperature must be positive");
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("mix: points have different dimensions");
  if (a.empty()) throw ShapeError("mix: points must have at least one coordinate");
}

double check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidParameter("mix: forced lambda must be in [0, 1]");
  return lambda;
}

MixedPoint lerp(std::span<const double> x_i, std::span<const double> x_j, double lambda) {
  MixedPoint out{std::vector<double>(x_i.size()), lambda};
  for (std::size_t d = 0; d < x_i.size(); ++d) {
    // Endpoints reproduce the source coordinates exactly; the clamp keeps
    // rounding from stepping outside the segment.
    if (lambda == 1.0) out.point[d] = x_i[d];
    else if (lambda == 0.0) out.point[d] = x_j[d];
    else
      out.point[d] = std::clamp(lambda * x_i[d] + (1.0 - lambda) * x_j[d], std::min(x_i[d], x_j[d]),
                                std::max(x_i[d], x_j[d]));
  }
  return out;
}

}  // namespace

std::pair<double, double> adaptive_weights(double s_i, double s_j, double temperature) {
  if (!(temperature > 0.0)) throw InvalidParameter("adaptive_weights: temperature must be positive");
  const double a = s_i / temperature;
  const double b = s_j / temperature;
  const double m = std::max(a, b);
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  const double w_i = ea / (ea + eb);
  return {w_i, 1.0 - w_i};
}

MixedPoint diversemix_pair(std::span<const double> x_i, std::span<const double> x_j, double s_i, double s_j,
                           const MixStrategy& strategy, Rng& rng, std::optional<double> forced_lambda) {
  if (strategy.kind != MixKind::diversemix) throw ConfigError("diversemix_pair: strategy kind is not diversemix");
  strategy.validate();
  check_pair(x_i, x_j);
  if (forced_lambda) return lerp(x_i, x_j, check_lambda(*forced_lambda));
  auto [w_i, w_j] = adaptive_weights(s_i, s_j, strategy.temperature);
  // A weight that rounds to zero would make the Beta parameter invalid; the
  // limit of Beta(a, b) as a -> 0 puts all mass at 0, so fall back to the endpoint.
  if (w_i * strategy.alpha <= 0.0) return lerp(x_i, x_j, 0.0);
  if (w_j * strategy.alpha <= 0.0) return lerp(x_i, x_j, 1.0);
  return lerp(x_i, x_j, beta_sample(w_i * strategy.alpha, w_j * strategy.alpha, rng));
}

MixedPoint vanilla_mixup_pair(std::span<const double> x_i, std::span<const double> x_j, double alpha, Rng& rng,
                              std::optional<double> forced_lambda) {
  if (!(alpha > 0.0)) throw InvalidParameter("vanilla_mixup_pair: alpha must be positive");
  check_pair(x_i, x_j);
  const double lambda = forced_lambda ? check_lambda(*forced_lambda) : beta_sample(alpha, alpha, rng);
  return lerp(x_i, x_j, lambda);
}

MixedPoint cutmask_pair(std::span<const double> x_i, std::span<const double> x_j, double alpha, Rng& rng,
                        std::optional<double> forced_lambda) {
  if (!(alpha > 0.0)) throw InvalidParameter("cutmask_pair: alpha must be positive");
  check_pair(x_i, x_j);
  const double lambda = forced_lambda ? check_lambda(*forced_lambda) : beta_sample(alpha, alpha, rng);
  const std::size_t d = x_i.size();
  const auto take = static_cast<std::size_t>(std::lround(lambda * static_cast<double>(d)));
  // Partial Fisher-Yates: the first `take` entries form a uniform random subset.
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t t = 0; t < take && t + 1 < d; ++t) std::swap(order[t], order[t + rng.below(d - t)]);
  MixedPoint out{std::vector<double>(x_j.begin(), x_j.end()), lambda};
  for (std::size_t t = 0; t < take; ++t) out.point[order[t]] = x_i[order[t]];
  return out;
}

MixedBatch mix_batch(const Matrix& batch, std::span<const double> scores, const MixStrategy& strategy, Rng& rng) {
  if (scores.size() != batch.rows) throw InvalidInput("mix_batch: score count differs from batch size");
  strategy.validate();
  MixedBatch out{batch, std::vector<MixProvenance>(batch.rows)};
  if (strategy.kind == MixKind::none) {
    for (std::size_t t = 0; t < batch.rows; ++t) out.provenance[t] = {t, t, 1.0};
    return out;
  }

  // One permutation drives both the shuffled points and the shuffled scores.
  std::vector<std::size_t> perm(batch.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t t = batch.rows; t > 1; --t) std::swap(perm[t - 1], perm[rng.below(t)]);

  for (std::size_t t = 0; t < batch.rows; ++t) {
    const std::size_t p = perm[t];
    const auto x_i = batch.row(t);
    const auto x_j = batch.row(p);
    MixedPoint mixed;
    switch (strategy.kind) {
      case MixKind::diversemix:
        mixed = diversemix_pair(x_i, x_j, scores[t], scores[p], strategy, rng);
        break;
      case MixKind::vanilla:
        mixed = vanilla_mixup_pair(x_i, x_j, strategy.alpha, rng);
        break;
      case MixKind::cutmask:
        mixed = cutmask_pair(x_i, x_j, strategy.alpha, rng);
        break;
      case MixKind::none:
        break;
    }
    std::copy(mixed.point.begin(), mixed.point.end(), out.points.row(t).begin());
    out.provenance[t] = {t, p, mixed.lambda};
  }
  return out;
}

}  // namespace oodlab
