// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   1. Diversity ordering on the default configuration over five seeds.
//   2. Gradient correctness on ten randomized problems.
//   3. Metric oracle equivalence on 100 random score sets with ties.
//   4. Adaptive Beta sampler fidelity and the symmetric-score weights.
//   5. Determinism of the sweep's results.csv (wall_ms excluded).
//   6. Regularizer boundary identities.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oodlab/harness.hpp"
#include "support.hpp"

using namespace oodlab;
using namespace oodlab::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++g_failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1 and 5: the four-method sweep
// ---------------------------------------------------------------------------

const std::vector<std::string> kMethods{"no-aux", "aux", "aux:1000", "diversemix"};
const std::vector<std::size_t> kLevels{10};
const std::vector<std::uint64_t> kSeeds{0, 1, 2, 3, 4};

struct SweepRun {
  std::vector<SweepRow> rows;
  double seconds = 0.0;
};

SweepRun acceptance_sweep() {
  std::vector<MethodSpec> methods;
  for (const auto& m : kMethods) methods.push_back(MethodSpec::parse(m));
  const auto t0 = Clock::now();
  SweepRun run;
  run.rows = run_sweep(default_config(), methods, kLevels, kSeeds);
  run.seconds = seconds_since(t0);
  return run;
}

std::string results_without_wall_time(const std::vector<SweepRow>& rows) {
  std::stringstream in;
  write_results_csv(rows, in);
  std::stringstream out;
  for (std::string line; std::getline(in, line);) {
    // wall_ms is the ninth of ten columns; the status text never contains commas.
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (i != 8) out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
  }
  return out.str();
}

struct MethodMean {
  double fpr95 = 0.0, auroc = 0.0;
  int n = 0;
};

Outcome check_diversity(const SweepRun& run) {
  std::map<std::string, MethodMean> mean;
  Outcome o;
  for (const auto& r : run.rows) {
    const std::string key = r.method + "@" + std::to_string(r.k);
    if (r.status != "ok") {
      o.pass = false;
      o.detail += key + " seed " + std::to_string(r.seed) + " failed (" + r.status + "); ";
      continue;
    }
    auto& m = mean[key];
    m.fpr95 += r.report.fpr95;
    m.auroc += r.report.auroc;
    ++m.n;
  }
  for (auto& [key, m] : mean) {
    m.fpr95 /= m.n;
    m.auroc /= m.n;
    std::printf("    %-16s mean FPR95 %.4f  mean AUROC %.4f  (%d seeds)\n", key.c_str(), m.fpr95, m.auroc, m.n);
  }
  const auto& none = mean["no-aux@10"];
  const auto& aux10 = mean["aux@10"];
  const auto& aux1000 = mean["aux@1000"];
  const auto& dm = mean["diversemix@10"];

  auto sub = [&](bool ok, const std::string& what) {
    std::printf("    %s %s\n", ok ? "ok  " : "MISS", what.c_str());
    if (!ok) o.pass = false;
  };
  sub(none.fpr95 > aux10.fpr95, "no-aux FPR95 " + fmt("%.4f", none.fpr95) + " > aux(k=10) " + fmt("%.4f", aux10.fpr95));
  sub(aux1000.fpr95 <= aux10.fpr95 - 0.02,
      "aux(k=1000) FPR95 " + fmt("%.4f", aux1000.fpr95) + " <= aux(k=10) - 0.02 = " + fmt("%.4f", aux10.fpr95 - 0.02));
  sub(dm.fpr95 <= aux10.fpr95, "diverseMix FPR95 " + fmt("%.4f", dm.fpr95) + " <= aux(k=10) " + fmt("%.4f", aux10.fpr95));
  sub(dm.auroc >= aux10.auroc - 0.005,
      "diverseMix AUROC " + fmt("%.4f", dm.auroc) + " >= aux(k=10) - 0.005 = " + fmt("%.4f", aux10.auroc - 0.005));
  sub(run.seconds < 600.0, "sweep runtime " + fmt("%.1f", run.seconds) + " s < 600 s");
  o.detail += "20-cell sweep in " + fmt("%.1f", run.seconds) + " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Gradients
// ---------------------------------------------------------------------------

Outcome check_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::size_t i = 0; i < 10; ++i) worst = std::max(worst, max_gradient_rel_error(make_grad_problem(i, 20240)));
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          "max relative error " + fmt("%.3g", worst) + " (< 1e-4) over 10 problems in " + fmt("%.2f", secs) + " s (< 30 s)"};
}

// ---------------------------------------------------------------------------
// 3. Metrics
// ---------------------------------------------------------------------------

Outcome check_metrics() {
  Rng rng(31337, "acceptance/metrics");
  double worst_auroc = 0.0;
  int fpr_mismatch = 0, aupr_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    const auto s = random_scores_with_ties(rng);
    worst_auroc = std::max(worst_auroc, std::abs(auroc(s.id, s.ood) - auroc_pairwise(s.id, s.ood)));
    fpr_mismatch += fpr_at_tpr(s.id, s.ood) != brute_force_fpr(s.id, s.ood, 0.95);
    const std::vector<double> id(s.id.size(), 0.5), ood(s.ood.size(), 0.5);
    const double prevalence = static_cast<double>(id.size()) / static_cast<double>(id.size() + ood.size());
    aupr_mismatch += aupr(id, ood) != prevalence;
  }
  return {worst_auroc <= 1e-9 && fpr_mismatch == 0 && aupr_mismatch == 0,
          "max |AUROC - Mann-Whitney| " + fmt("%.3g", worst_auroc) + " (<= 1e-9), FPR95 oracle mismatches " +
              std::to_string(fpr_mismatch) + ", constant-scorer AUPR mismatches " + std::to_string(aupr_mismatch)};
}

// ---------------------------------------------------------------------------
// 4. Sampler
// ---------------------------------------------------------------------------

Outcome check_sampler() {
  Rng pick(4242, "acceptance/tuples");
  Rng draws(4242, "acceptance/draws");
  const int n = 100000;
  double worst_z = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double si = 10.0 * pick.normal(), sj = 10.0 * pick.normal();
    const double T = 0.5 + 19.5 * pick.uniform();
    const double alpha = 0.5 + 9.5 * pick.uniform();
    const MixStrategy st{MixKind::diversemix, alpha, T};
    const double w = adaptive_weights(si, sj, T).first;
    const std::vector<double> xi{0.0}, xj{1.0};
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += diversemix_pair(xi, xj, si, sj, st, draws).lambda;
    const double a = w * alpha, b = (1.0 - w) * alpha;
    const double se = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)) / n);
    const double z = se > 0.0 ? std::abs(sum / n - w) / se : (sum / n == w ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
  }
  const auto [hi, lo] = adaptive_weights(2.5, 2.5, 10.0);
  const bool symmetric = hi == 0.5 && lo == 0.5;
  return {worst_z <= 4.0 && symmetric, "worst |mean - s_i| = " + fmt("%.2f", worst_z) +
                                           " SE (<= 4) over 10 tuples; equal scores give (" + fmt("%g", hi) + ", " +
                                           fmt("%g", lo) + ")"};
}

// ---------------------------------------------------------------------------
// 6. Regularizer identities
// ---------------------------------------------------------------------------

Outcome check_regularizers() {
  const RegLossSpec energy{};
  const std::vector<double> id(50, energy.m_in), ood(70, energy.m_out);
  const double boundary = reg_loss(id, ood, energy);
  double worst_oe = 0.0;
  const RegLossSpec oe{RegKind::oe};
  for (std::size_t k : {2, 3, 10, 100}) worst_oe = std::max(worst_oe, std::abs(reg_loss(Matrix(8, k, 0.0), oe, k) - std::log(static_cast<double>(k))));
  return {boundary == 0.0 && worst_oe <= 1e-12, "energy loss at the margins = " + fmt("%g", boundary) +
                                                    "; max |OE(zero logits) - ln K| = " + fmt("%.3g", worst_oe)};
}

}  // namespace

int main() {
  std::printf("oodlab acceptance suite (%d kernel threads)\n", kernel_threads());

  report(2, "gradient correctness", check_gradients());
  report(3, "metric oracle equivalence", check_metrics());
  report(4, "sampler fidelity", check_sampler());
  report(6, "regularizer boundary identities", check_regularizers());

  std::printf("running the diversity sweep (4 methods x 5 seeds, default config)...\n");
  std::fflush(stdout);
  const SweepRun first = acceptance_sweep();
  {
    std::ofstream out("acceptance_results.csv");
    write_results_csv(first.rows, out);
  }
  report(1, "diversity ordering", check_diversity(first));

  std::printf("repeating the sweep for the determinism check...\n");
  std::fflush(stdout);
  const SweepRun second = acceptance_sweep();
  const std::string a = results_without_wall_time(first.rows), b = results_without_wall_time(second.rows);
  report(5, "sweep determinism",
         {a == b, a == b ? "results.csv identical across two runs (wall_ms excluded)" : "results.csv differs between runs"});

  std::printf("%d of 6 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
