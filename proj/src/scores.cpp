#include <algorithm>
#include <cmath>

#include "oodlab/error.hpp"
#include "oodlab/oodcore.hpp"

namespace oodlab {

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::energy: return "energy";
    case ScoreKind::msp: return "msp";
    case ScoreKind::kplus1: return "kplus1";
  }
  return "?";
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "energy") return ScoreKind::energy;
  if (name == "msp") return ScoreKind::msp;
  if (name == "kplus1") return ScoreKind::kplus1;
  throw ConfigError("unknown score kind '" + std::string(name) + "'");
}

double score(std::span<const double> logits, ScoreKind kind) {
  if (logits.size() < 2) throw InvalidInput("score: need at least two logits");
  switch (kind) {
    case ScoreKind::energy:
      return log_sum_exp(logits);
    case ScoreKind::msp: {
      const auto p = softmax(logits);
      return *std::max_element(p.begin(), p.end());
    }
    case ScoreKind::kplus1: {
      if (logits.size() < 3)
        throw ConfigError("score: kplus1 needs K+1 logits with K >= 2");
      // exp(z_last - lse) is the softmax mass on the OOD head.
      return -std::exp(logits.back() - log_sum_exp(logits));
    }
  }
  throw ConfigError("score: unknown kind");
}

std::vector<double> score_rows(const Matrix& logits, ScoreKind kind) {
  std::vector<double> out(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) out[r] = score(logits.row(r), kind);
  return out;
}

}  // namespace oodlab
