#include <algorithm>
#include <cmath>
#include <functional>

#include "oodlab/error.hpp"
#include "oodlab/nn.hpp"
#include "oodlab/oodcore.hpp"
#include "oodlab/synthdata.hpp"

namespace oodlab {

namespace {

void require_nonempty(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty() || b.empty()) throw InvalidInput(std::string(what) + ": score sets must be non-empty");
}

std::vector<double> sorted_desc(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

// Walks both descending lists one distinct threshold at a time, reporting the
// cumulative (tp, fp) counts after each tie block.
template <typename Visit>
void sweep_thresholds(const std::vector<double>& id_desc, const std::vector<double>& ood_desc, Visit visit) {
  std::size_t i = 0, o = 0;
  while (i < id_desc.size() || o < ood_desc.size()) {
    double t;
    if (i == id_desc.size()) t = ood_desc[o];
    else if (o == ood_desc.size()) t = id_desc[i];
    else t = std::max(id_desc[i], ood_desc[o]);
    while (i < id_desc.size() && id_desc[i] == t) ++i;
    while (o < ood_desc.size() && ood_desc[o] == t) ++o;
    visit(static_cast<double>(i), static_cast<double>(o));
  }
}

}  // namespace

Verdict detect(double score_value, double gamma) { return score_value >= gamma ? Verdict::id : Verdict::ood; }

double calibrate_gamma(std::span<const double> id_scores, double tpr_target) {
  if (id_scores.empty()) throw InvalidInput("calibrate_gamma: empty ID scores");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) throw InvalidParameter("calibrate_gamma: tpr_target must be in (0, 1]");
  const auto desc = sorted_desc(id_scores);
  const double n = static_cast<double>(desc.size());
  // Largest candidate whose admitted fraction (counting ties) reaches the target.
  std::size_t i = 0;
  while (i < desc.size()) {
    std::size_t j = i;
    while (j < desc.size() && desc[j] == desc[i]) ++j;
    if (static_cast<double>(j) / n >= tpr_target) return desc[i];
    i = j;
  }
  return desc.back();
}

double fpr_at_tpr(std::span<const double> id_scores, std::span<const double> ood_scores, double tpr_target) {
  require_nonempty(id_scores, ood_scores, "fpr_at_tpr");
  const double gamma = calibrate_gamma(id_scores, tpr_target);
  const auto above = std::count_if(ood_scores.begin(), ood_scores.end(), [gamma](double s) { return s >= gamma; });
  return static_cast<double>(above) / static_cast<double>(ood_scores.size());
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_nonempty(id_scores, ood_scores, "auroc");
  const auto id_desc = sorted_desc(id_scores);
  const auto ood_desc = sorted_desc(ood_scores);
  // Trapezoids in count space, normalized once at the end.
  double area2 = 0.0, prev_tp = 0.0, prev_fp = 0.0;
  sweep_thresholds(id_desc, ood_desc, [&](double tp, double fp) {
    area2 += (fp - prev_fp) * (tp + prev_tp);
    prev_tp = tp;
    prev_fp = fp;
  });
  return area2 / (2.0 * static_cast<double>(id_scores.size()) * static_cast<double>(ood_scores.size()));
}

double auroc_pairwise(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_nonempty(id_scores, ood_scores, "auroc_pairwise");
  double wins = 0.0, ties = 0.0;
  for (double s : id_scores)
    for (double o : ood_scores) {
      if (s > o) wins += 1.0;
      else if (s == o) ties += 1.0;
    }
  return (wins + 0.5 * ties) / (static_cast<double>(id_scores.size()) * static_cast<double>(ood_scores.size()));
}

double aupr(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_nonempty(id_scores, ood_scores, "aupr");
  const auto id_desc = sorted_desc(id_scores);
  const auto ood_desc = sorted_desc(ood_scores);
  const double n_id = static_cast<double>(id_desc.size());
  // ID items retrieved before any OOD item have precision 1 and are counted
  // exactly; later blocks add their recall step times their precision. A
  // perfect ranking and a single tie block each round only once.
  double clean = 0.0, weighted = 0.0, prev_tp = 0.0;
  sweep_thresholds(id_desc, ood_desc, [&](double tp, double fp) {
    if (tp > prev_tp) {
      if (fp == 0.0) clean += tp - prev_tp;
      else weighted += ((tp - prev_tp) / n_id) * (tp / (tp + fp));
    }
    prev_tp = tp;
  });
  return std::min(1.0, clean / n_id + weighted);
}

double id_accuracy(const Matrix& logits, std::span<const int> labels, std::size_t num_classes) {
  if (logits.rows == 0) throw InvalidInput("id_accuracy: empty set");
  if (labels.size() != logits.rows) throw ShapeError("id_accuracy: label count differs from row count");
  if (num_classes == 0 || num_classes > logits.cols) throw ShapeError("id_accuracy: bad class count");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const auto z = logits.row(r).first(num_classes);
    // max_element returns the first maximum, so ties go to the lowest index.
    const auto pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

double id_accuracy(const MlpModel& model, const LabeledSet& test_set) {
  return id_accuracy(forward(model, test_set.points), test_set.labels, model.num_classes);
}

DetectionReport make_report(std::span<const double> id_scores, std::span<const double> ood_scores,
                            double id_acc, double tpr_target) {
  DetectionReport r;
  r.gamma = calibrate_gamma(id_scores, tpr_target);
  r.fpr95 = fpr_at_tpr(id_scores, ood_scores, tpr_target);
  r.auroc = auroc(id_scores, ood_scores);
  r.aupr = aupr(id_scores, ood_scores);
  r.id_acc = id_acc;
  return r;
}

}  // namespace oodlab
