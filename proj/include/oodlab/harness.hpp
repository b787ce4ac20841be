#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oodlab/mixing.hpp"
#include "oodlab/nn.hpp"
#include "oodlab/oodcore.hpp"
#include "oodlab/synthdata.hpp"

namespace oodlab {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct IdDataConfig {
  IdGeometry geometry;
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 500;
};

struct AuxDataConfig {
  std::size_t k = 10;
  std::size_t m = 10000;
  AuxGeometry geometry;
};

/// Which held-out OOD sets evaluation runs on. Each entry is a full
/// TestOodGeometry; the default pair separates the interleaved ring from the far field.
struct TestOodConfig {
  std::size_t m = 2000;
  std::vector<std::pair<std::string, TestOodGeometry>> sets = {
      {"ring", TestOodGeometry{.ring_fraction = 1.0}},
      {"far", TestOodGeometry{.ring_fraction = 0.0}},
  };
};

struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::vector<long> milestones;
  double decay_factor = 0.1;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  IdDataConfig id;
  AuxDataConfig aux;
  TestOodConfig test_ood;
  std::vector<std::size_t> hidden = {64, 64};
  OptimizerConfig optimizer;
  long iterations = 2000;
  std::size_t batch_size = 128;
  double outlier_ratio = 1.0;  // outlier rows per ID row in each step
  bool use_outliers = true;
  MixStrategy mix{MixKind::diversemix, 4.0, 10.0};
  RegLossSpec reg;
  ScoreKind score = ScoreKind::energy;
  long log_every = 100;

  /// Throws ConfigError on any inconsistency (including kplus1 mismatches).
  void validate() const;
  std::size_t num_classes() const { return id.geometry.num_classes; }
  std::size_t output_dim() const { return num_classes() + (reg.kind == RegKind::kplus1 ? 1 : 0); }
  std::vector<std::size_t> layer_dims() const;
};

ExperimentConfig default_config();

/// Parses a JSON document. Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// Returns `base` adjusted for a named method: no-aux, aux, vanilla, diversemix, cutmask.
ExperimentConfig apply_method(ExperimentConfig base, std::string_view method);

// ---------------------------------------------------------------------------
// Data for one run
// ---------------------------------------------------------------------------

/// Every dataset a run touches, drawn from named substreams of the seed so that
/// all methods sharing a seed see identical data.
struct ExperimentData {
  LabeledSet id_train;
  OutlierSet aux;
  LabeledSet id_test;
  std::vector<std::pair<std::string, OutlierSet>> ood_tests;
};

ExperimentData make_experiment_data(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Training and evaluation
// ---------------------------------------------------------------------------

struct HistoryRow {
  long iteration = 0;
  double ce_loss = 0.0;
  double reg_loss = 0.0;
  double total_loss = 0.0;
};

/// Optional instrumentation. on_scores sees the model state that produced the
/// outlier scores, before that iteration's update.
struct TrainHooks {
  std::function<void(long iteration, const MlpModel& model, const Matrix& outlier_batch,
                     std::span<const double> scores)>
      on_scores;
  std::function<void(long iteration, const MixedBatch& mixed)> on_mix;
};

struct TrainResult {
  MlpModel model;
  std::vector<HistoryRow> history;
};

/// The outlier-mixing training loop. Deterministic given (config, data).
TrainResult train(const ExperimentConfig& config, const ExperimentData& data, const TrainHooks& hooks = {});
/// Convenience: builds the data from config.seed first.
TrainResult train(const ExperimentConfig& config, const TrainHooks& hooks = {});

struct NamedReport {
  std::string set;
  DetectionReport report;
};

struct RunResult {
  std::vector<NamedReport> per_set;
  DetectionReport aggregate;  // unweighted mean over per_set
  std::vector<HistoryRow> history;
  double wall_ms = 0.0;
};

RunResult evaluate(const MlpModel& model, const LabeledSet& id_test,
                   std::span<const std::pair<std::string, OutlierSet>> ood_tests, ScoreKind score_kind);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One method token. "aux:1000" pins k for that method; plain "aux" follows the k list.
struct MethodSpec {
  std::string name;
  std::optional<std::size_t> pinned_k;

  static MethodSpec parse(std::string_view token);
  std::string label() const;
};

struct SweepRow {
  std::string method;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  DetectionReport report;
  std::vector<NamedReport> per_set;
  double wall_ms = 0.0;
  std::string status = "ok";
};

/// Trains and evaluates every (method, k, seed) cell. Cells run in parallel
/// under OpenMP; rows come back in enumeration order. A failing cell records
/// its error in `status` and the sweep continues.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, std::span<const MethodSpec> methods,
                                std::span<const std::size_t> k_levels, std::span<const std::uint64_t> seeds,
                                bool parallel = true);

void write_results_csv(std::span<const SweepRow> rows, std::ostream& out);
void write_per_set_csv(std::span<const SweepRow> rows, std::ostream& out);
void write_history_csv(std::span<const HistoryRow> history, std::ostream& out);
void write_report_csv(const RunResult& result, std::ostream& out);
void write_scores_csv(std::span<const double> id_scores, std::span<const double> ood_scores, std::ostream& out);
void write_mix_csv(const MixedBatch& mixed, std::ostream& out);

// ---------------------------------------------------------------------------
// Score lattice
// ---------------------------------------------------------------------------

struct GridBounds {
  double xmin, xmax, ymin, ymax;
};

struct GridPoint {
  double x, y, score;
};

/// Scores on a resolution x resolution lattice including the bounds; y-major, x fastest.
std::vector<GridPoint> score_grid(const MlpModel& model, ScoreKind kind, const GridBounds& bounds,
                                  std::size_t resolution);
void write_grid_csv(std::span<const GridPoint> grid, std::ostream& out);

}  // namespace oodlab
