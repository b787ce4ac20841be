#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodlab/numerics.hpp"

namespace oodlab {

struct MlpModel;
struct LabeledSet;

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

/// Scoring function S(x). Every variant is oriented so that larger means more ID-like.
enum class ScoreKind { energy, msp, kplus1 };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);

/// energy: log-sum-exp of the logits; msp: max softmax probability;
/// kplus1: minus the softmax mass on the last (OOD) logit.
double score(std::span<const double> logits, ScoreKind kind);

/// score() applied to every row.
std::vector<double> score_rows(const Matrix& logits, ScoreKind kind);

// ---------------------------------------------------------------------------
// Regularizers
// ---------------------------------------------------------------------------

enum class RegKind { energy, oe, kplus1 };

std::string_view to_string(RegKind kind);
RegKind parse_reg_kind(std::string_view name);

/// Outlier regularizer and its weight in the total objective CE + omega * L_aux.
struct RegLossSpec {
  RegKind kind = RegKind::energy;
  double omega = 0.01;
  double m_in = 3.0;   // energy only: ID scores pushed above this
  double m_out = -3.0; // energy only: outlier scores pushed below this

  /// Throws ConfigError on omega < 0 or, for energy, m_in <= m_out.
  void validate() const;
};

/// Energy hinge: mean(max(0, m_in - s_id)^2) + mean(max(0, s_out - m_out)^2).
/// An empty side contributes nothing.
double reg_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                const RegLossSpec& spec);

/// OE / K+1 variants, computed from outlier logits. `num_classes` is K.
double reg_loss(const Matrix& outlier_logits, const RegLossSpec& spec, std::size_t num_classes);

/// A scalar loss together with its gradient w.r.t. the logits it was computed from.
struct LogitLoss {
  double value = 0.0;
  Matrix grad;
};

/// Mean cross-entropy over rows. Labels index into the logit columns.
LogitLoss cross_entropy(const Matrix& logits, std::span<const int> labels);

struct RegLossGrad {
  double value = 0.0;
  Matrix id_grad;      // d L_aux / d id_logits
  Matrix outlier_grad; // d L_aux / d outlier_logits
};

/// L_aux and its logit gradients for any variant (unweighted by omega).
RegLossGrad reg_loss_and_grad(const Matrix& id_logits, const Matrix& outlier_logits,
                              const RegLossSpec& spec, std::size_t num_classes);

// ---------------------------------------------------------------------------
// Detection and metrics
// ---------------------------------------------------------------------------

enum class Verdict { id, ood };

/// ID iff score >= gamma.
Verdict detect(double score_value, double gamma);

/// The largest ID score that, used as a threshold, still admits at least
/// `tpr_target` of the ID scores (ties admitted together).
double calibrate_gamma(std::span<const double> id_scores, double tpr_target = 0.95);

/// Fraction of OOD scores at or above calibrate_gamma(id_scores, tpr_target).
double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores,
                  double tpr_target = 0.95);

/// Area under ROC via a sorted sweep with trapezoids (ID is the positive class).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Pairwise Mann-Whitney statistic with half credit for ties. O(n*m); used as the
/// oracle for auroc() and by callers that want the literal definition.
double auroc_pairwise(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Step-wise average precision with ID as the positive class.
double aupr(std::span<const double> id_scores, std::span<const double> ood_scores);

/// Fraction of rows whose argmax over the first `num_classes` logits equals the
/// label. Ties go to the lowest index.
double id_accuracy(const Matrix& logits, std::span<const int> labels, std::size_t num_classes);
double id_accuracy(const MlpModel& model, const LabeledSet& test_set);

struct DetectionReport {
  double gamma = 0.0;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double id_acc = 0.0;
};

/// Metrics for one OOD set. `id_acc` is passed through unchanged.
DetectionReport make_report(std::span<const double> id_scores, std::span<const double> ood_scores,
                            double id_acc, double tpr_target = 0.95);

}  // namespace oodlab
