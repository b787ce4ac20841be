#pragma once

// Helpers shared by the unit tests and the acceptance binary: random models
// and batches, a central-difference gradient oracle, brute-force metric oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <span>
#include <vector>

#include "oodlab/nn.hpp"
#include "oodlab/numerics.hpp"
#include "oodlab/oodcore.hpp"

namespace oodlab::testing {

inline Matrix random_points(std::size_t n, std::size_t d, Rng& rng, double scale) {
  Matrix m(n, d);
  for (auto& v : m.values) v = scale * rng.normal();
  return m;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<int> out(n);
  for (auto& l : out) l = static_cast<int>(rng.below(k));
  return out;
}

/// One randomized gradient-check problem.
struct GradProblem {
  MlpModel model;
  Matrix id_points;
  std::vector<int> labels;
  Matrix outliers;
  RegLossSpec reg;
};

/// Builds problem number `index`; the regularizer cycles energy, oe, kplus1.
inline GradProblem make_grad_problem(std::size_t index, std::uint64_t seed) {
  Rng rng(seed, "gradcheck");
  Rng r = rng.substream("problem/" + std::to_string(index));
  GradProblem p;
  const RegKind kinds[] = {RegKind::energy, RegKind::oe, RegKind::kplus1};
  p.reg.kind = kinds[index % 3];
  p.reg.omega = 0.1 + 0.9 * r.uniform();
  if (p.reg.kind == RegKind::energy) {
    // Margins near the untrained energy so both hinges are partly active.
    p.reg.m_in = 1.0 + r.uniform();
    p.reg.m_out = 0.5 + 0.5 * r.uniform();
  }
  const std::size_t k = 2 + r.below(3);
  const std::size_t out_dim = k + (p.reg.kind == RegKind::kplus1 ? 1 : 0);
  const std::size_t depth = 1 + r.below(2);
  std::vector<std::size_t> dims{2 + r.below(3)};
  for (std::size_t i = 0; i < depth; ++i) dims.push_back(3 + r.below(6));
  dims.push_back(out_dim);
  p.model = MlpModel::glorot(dims, k, r);
  for (auto& layer : p.model.layers)
    for (auto& b : layer.biases) b = 0.1 * r.normal();
  const std::size_t n_id = 3 + r.below(6), n_out = 3 + r.below(6);
  p.id_points = random_points(n_id, dims.front(), r, 2.0);
  p.labels = random_labels(n_id, k, r);
  p.outliers = random_points(n_out, dims.front(), r, 2.0);
  return p;
}

/// Max over every parameter of |analytic - numeric| / max(|analytic|, |numeric|, floor),
/// with the numeric gradient from central differences of step h.
inline double max_gradient_rel_error(const GradProblem& p, double h = 1e-5, double floor = 1e-6) {
  const auto analytic = loss_and_grad(p.model, p.id_points, p.labels, p.outliers, p.reg).grads;
  MlpModel work = p.model;
  auto total = [&]() { return loss_and_grad(work, p.id_points, p.labels, p.outliers, p.reg).loss.total; };
  double worst = 0.0;
  auto probe = [&](double& param, double a) {
    const double saved = param;
    param = saved + h;
    const double up = total();
    param = saved - h;
    const double down = total();
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t l = 0; l < work.layers.size(); ++l) {
    auto& layer = work.layers[l];
    for (std::size_t i = 0; i < layer.weights.values.size(); ++i)
      probe(layer.weights.values[i], analytic.layers[l].weights.values[i]);
    for (std::size_t i = 0; i < layer.biases.size(); ++i) probe(layer.biases[i], analytic.layers[l].biases[i]);
  }
  return worst;
}

/// FPR oracle: try every candidate threshold among the ID scores, keep the
/// largest one admitting at least `tpr` of them, count OOD scores at or above it.
inline double brute_force_fpr(std::span<const double> id, std::span<const double> ood, double tpr) {
  double best = -INFINITY;
  for (double t : id) {
    const auto admitted = std::count_if(id.begin(), id.end(), [t](double s) { return s >= t; });
    if (static_cast<double>(admitted) / static_cast<double>(id.size()) >= tpr) best = std::max(best, t);
  }
  const auto above = std::count_if(ood.begin(), ood.end(), [best](double s) { return s >= best; });
  return static_cast<double>(above) / static_cast<double>(ood.size());
}

/// Random score sets drawn from a small grid so that ties are common.
struct ScoreInstance {
  std::vector<double> id, ood;
};

inline ScoreInstance random_scores_with_ties(Rng& rng, std::size_t max_size = 50) {
  ScoreInstance s;
  const std::size_t n = 1 + rng.below(max_size), m = 1 + rng.below(max_size);
  const std::size_t levels = 2 + rng.below(15);
  const double shift = rng.uniform();
  for (std::size_t i = 0; i < n; ++i) s.id.push_back(static_cast<double>(rng.below(levels)) * 0.25 + shift);
  for (std::size_t i = 0; i < m; ++i) s.ood.push_back(static_cast<double>(rng.below(levels)) * 0.25 - 0.5 + shift);
  return s;
}

}  // namespace oodlab::testing
