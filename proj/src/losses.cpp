#include <cmath>

#include "oodlab/error.hpp"
#include "oodlab/oodcore.hpp"

namespace oodlab {

std::string_view to_string(RegKind kind) {
  switch (kind) {
    case RegKind::energy: return "energy";
    case RegKind::oe: return "oe";
    case RegKind::kplus1: return "kplus1";
  }
  return "?";
}

RegKind parse_reg_kind(std::string_view name) {
  if (name == "energy") return RegKind::energy;
  if (name == "oe") return RegKind::oe;
  if (name == "kplus1") return RegKind::kplus1;
  throw ConfigError("unknown regularizer '" + std::string(name) + "'");
}

void RegLossSpec::validate() const {
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigError("omega must be a finite non-negative number");
  if (kind == RegKind::energy && !(m_in > m_out))
    throw ConfigError("energy regularizer needs m_in > m_out");
}

namespace {

double hinge_sq(double v) { return v > 0.0 ? v * v : 0.0; }

void check_outlier_head(const Matrix& logits, const RegLossSpec& spec, std::size_t num_classes) {
  if (spec.kind == RegKind::kplus1) {
    if (logits.cols != num_classes + 1)
      throw ConfigError("kplus1 regularizer needs an output head of width K+1");
  } else if (logits.cols != num_classes) {
    throw ConfigError("regularizer expects logits of width K");
  }
}

}  // namespace

double reg_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                const RegLossSpec& spec) {
  if (spec.kind != RegKind::energy) throw ConfigError("reg_loss: score inputs are only valid for the energy regularizer");
  spec.validate();
  double in_term = 0.0;
  for (double s : id_scores) in_term += hinge_sq(spec.m_in - s);
  double out_term = 0.0;
  for (double s : ood_scores) out_term += hinge_sq(s - spec.m_out);
  double loss = 0.0;
  if (!id_scores.empty()) loss += in_term / static_cast<double>(id_scores.size());
  if (!ood_scores.empty()) loss += out_term / static_cast<double>(ood_scores.size());
  return loss;
}

double reg_loss(const Matrix& outlier_logits, const RegLossSpec& spec, std::size_t num_classes) {
  if (spec.kind == RegKind::energy) throw ConfigError("reg_loss: energy regularizer consumes scores, not logits");
  spec.validate();
  check_outlier_head(outlier_logits, spec, num_classes);
  if (outlier_logits.rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < outlier_logits.rows; ++r) {
    const auto z = outlier_logits.row(r);
    const double lse = log_sum_exp(z);
    if (spec.kind == RegKind::oe) {
      double mean = 0.0;
      for (double v : z) mean += v;
      mean /= static_cast<double>(z.size());
      total += lse - mean;
    } else {
      total += lse - z[num_classes];
    }
  }
  return total / static_cast<double>(outlier_logits.rows);
}

LogitLoss cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows == 0) throw InvalidInput("cross_entropy: empty batch");
  if (labels.size() != logits.rows) throw ShapeError("cross_entropy: label count differs from row count");
  LogitLoss out{0.0, Matrix(logits.rows, logits.cols)};
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols) throw InvalidInput("cross_entropy: label out of range");
    const auto z = logits.row(r);
    out.value += log_sum_exp(z) - z[static_cast<std::size_t>(y)];
    const auto p = softmax(z);
    auto g = out.grad.row(r);
    for (std::size_t c = 0; c < z.size(); ++c) g[c] = p[c] * inv_n;
    g[static_cast<std::size_t>(y)] -= inv_n;
  }
  out.value *= inv_n;
  return out;
}

RegLossGrad reg_loss_and_grad(const Matrix& id_logits, const Matrix& outlier_logits,
                              const RegLossSpec& spec, std::size_t num_classes) {
  spec.validate();
  check_outlier_head(outlier_logits, spec, num_classes);
  RegLossGrad out{0.0, Matrix(id_logits.rows, id_logits.cols), Matrix(outlier_logits.rows, outlier_logits.cols)};

  if (spec.kind == RegKind::energy) {
    // dS/dz = softmax(z) for S = logsumexp(z).
    if (id_logits.rows > 0) {
      const double inv_n = 1.0 / static_cast<double>(id_logits.rows);
      double term = 0.0;
      for (std::size_t r = 0; r < id_logits.rows; ++r) {
        const auto z = id_logits.row(r);
        const double gap = spec.m_in - log_sum_exp(z);
        if (gap <= 0.0) continue;
        term += gap * gap;
        const auto p = softmax(z);
        auto g = out.id_grad.row(r);
        for (std::size_t c = 0; c < z.size(); ++c) g[c] = -2.0 * gap * p[c] * inv_n;
      }
      out.value += term * inv_n;
    }
    if (outlier_logits.rows > 0) {
      const double inv_m = 1.0 / static_cast<double>(outlier_logits.rows);
      double term = 0.0;
      for (std::size_t r = 0; r < outlier_logits.rows; ++r) {
        const auto z = outlier_logits.row(r);
        const double excess = log_sum_exp(z) - spec.m_out;
        if (excess <= 0.0) continue;
        term += excess * excess;
        const auto p = softmax(z);
        auto g = out.outlier_grad.row(r);
        for (std::size_t c = 0; c < z.size(); ++c) g[c] = 2.0 * excess * p[c] * inv_m;
      }
      out.value += term * inv_m;
    }
    return out;
  }

  if (outlier_logits.rows == 0) return out;
  const double inv_m = 1.0 / static_cast<double>(outlier_logits.rows);
  const std::size_t width = outlier_logits.cols;
  for (std::size_t r = 0; r < outlier_logits.rows; ++r) {
    const auto z = outlier_logits.row(r);
    const auto p = softmax(z);
    auto g = out.outlier_grad.row(r);
    if (spec.kind == RegKind::oe) {
      // CE against the uniform target: lse(z) - mean(z)
      double mean = 0.0;
      for (double v : z) mean += v;
      mean /= static_cast<double>(width);
      out.value += log_sum_exp(z) - mean;
      for (std::size_t c = 0; c < width; ++c) g[c] = (p[c] - 1.0 / static_cast<double>(width)) * inv_m;
    } else {
      out.value += log_sum_exp(z) - z[num_classes];
      for (std::size_t c = 0; c < width; ++c) g[c] = p[c] * inv_m;
      g[num_classes] -= inv_m;
    }
  }
  out.value *= inv_m;
  return out;
}

}  // namespace oodlab
