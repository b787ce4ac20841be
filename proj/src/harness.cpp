#include "oodlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "oodlab/error.hpp"

namespace oodlab {

namespace {

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), src.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto row = src.row(idx[r]);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

std::string k_label(std::size_t k) { return "aux/k=" + std::to_string(k); }

void set_precision(std::ostream& out) { out.precision(std::numeric_limits<double>::max_digits10); }

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

ExperimentData make_experiment_data(const ExperimentConfig& config) {
  config.validate();
  const Rng root(config.seed, "experiment");
  ExperimentData data;
  Rng id_train_rng = root.substream("id/train");
  data.id_train = make_id_dataset(config.id.train_per_class, id_train_rng, config.id.geometry);
  Rng aux_rng = root.substream(k_label(config.aux.k));
  data.aux = make_aux_outliers(config.aux.k, config.aux.m, aux_rng, config.aux.geometry);
  Rng id_test_rng = root.substream("id/test");
  data.id_test = make_id_dataset(config.id.test_per_class, id_test_rng, config.id.geometry);
  for (const auto& [name, geometry] : config.test_ood.sets) {
    Rng r = root.substream("ood/" + name);
    data.ood_tests.emplace_back(name, make_test_ood(config.test_ood.m, r, geometry));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

TrainResult train(const ExperimentConfig& config, const ExperimentData& data, const TrainHooks& hooks) {
  config.validate();
  if (data.id_train.points.rows == 0) throw InvalidInput("train: empty ID training set");
  if (config.use_outliers && data.aux.points.rows == 0) throw InvalidInput("train: empty auxiliary outlier set");

  const Rng root(config.seed, "train");
  Rng init_rng = root.substream("init");
  Rng id_rng = root.substream("id-batches");
  Rng aux_rng = root.substream("aux-batches");
  Rng mix_rng = root.substream("mix");

  const auto dims = config.layer_dims();
  TrainResult result{MlpModel::glorot(dims, config.num_classes(), init_rng), {}};
  MlpModel& model = result.model;
  OptimState opt = OptimState::for_model(model, config.optimizer.learning_rate, config.optimizer.momentum);
  opt.milestones = config.optimizer.milestones;
  opt.decay_factor = config.optimizer.decay_factor;

  const std::size_t n_id = config.batch_size;
  const auto n_aux = static_cast<std::size_t>(std::max(1.0, std::round(config.outlier_ratio * static_cast<double>(n_id))));
  std::vector<std::size_t> id_idx(n_id), aux_idx(n_aux);
  std::vector<int> labels(n_id);
  const Matrix no_outliers(0, 2);

  for (long it = 0; it < config.iterations; ++it) {
    for (std::size_t r = 0; r < n_id; ++r) {
      id_idx[r] = id_rng.below(data.id_train.points.rows);
      labels[r] = data.id_train.labels[id_idx[r]];
    }
    const Matrix id_batch = gather_rows(data.id_train.points, id_idx);

    Matrix outliers = no_outliers;
    if (config.use_outliers) {
      for (auto& i : aux_idx) i = aux_rng.below(data.aux.points.rows);
      const Matrix aux_batch = gather_rows(data.aux.points, aux_idx);
      // Scores come from the model as it enters this iteration.
      std::vector<double> scores(n_aux, 0.0);
      if (config.mix.kind == MixKind::diversemix || hooks.on_scores) {
        scores = score_rows(forward(model, aux_batch), config.score);
        if (!std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); }))
          throw DivergenceError("training diverged: non-finite outlier score at iteration " + std::to_string(it), it);
      }
      if (hooks.on_scores) hooks.on_scores(it, model, aux_batch, scores);
      MixedBatch mixed = mix_batch(aux_batch, scores, config.mix, mix_rng);
      if (hooks.on_mix) hooks.on_mix(it, mixed);
      outliers = std::move(mixed.points);
    }

    auto lg = loss_and_grad(model, id_batch, labels, outliers, config.reg);
    if (!std::isfinite(lg.loss.total))
      throw DivergenceError("training diverged: non-finite loss at iteration " + std::to_string(it), it);
    if (it % config.log_every == 0 || it + 1 == config.iterations)
      result.history.push_back({it, lg.loss.ce, lg.loss.reg, lg.loss.total});
    try {
      sgd_step(model, lg.grads, opt);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at iteration " + std::to_string(it), it);
    }
  }
  return result;
}

TrainResult train(const ExperimentConfig& config, const TrainHooks& hooks) {
  return train(config, make_experiment_data(config), hooks);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

RunResult evaluate(const MlpModel& model, const LabeledSet& id_test,
                   std::span<const std::pair<std::string, OutlierSet>> ood_tests, ScoreKind score_kind) {
  if (id_test.points.rows == 0) throw InvalidInput("evaluate: empty ID test set");
  if (ood_tests.empty()) throw InvalidInput("evaluate: no OOD test sets");
  const Matrix id_logits = forward(model, id_test.points);
  const auto id_scores = score_rows(id_logits, score_kind);
  const double acc = id_accuracy(id_logits, id_test.labels, model.num_classes);

  RunResult result;
  for (const auto& [name, set] : ood_tests) {
    if (set.points.rows == 0) throw InvalidInput("evaluate: empty OOD set '" + name + "'");
    const auto ood_scores = score_rows(forward(model, set.points), score_kind);
    result.per_set.push_back({name, make_report(id_scores, ood_scores, acc)});
  }
  const double n = static_cast<double>(result.per_set.size());
  for (const auto& r : result.per_set) {
    result.aggregate.gamma += r.report.gamma / n;
    result.aggregate.fpr95 += r.report.fpr95 / n;
    result.aggregate.auroc += r.report.auroc / n;
    result.aggregate.aupr += r.report.aupr / n;
  }
  result.aggregate.id_acc = acc;
  return result;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

MethodSpec MethodSpec::parse(std::string_view token) {
  MethodSpec m;
  const auto colon = token.find(':');
  m.name = std::string(token.substr(0, colon));
  if (colon != std::string_view::npos) {
    const std::string k(token.substr(colon + 1));
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(k, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != k.size() || k.empty() || v == 0) throw ConfigError("bad method token '" + std::string(token) + "'");
    m.pinned_k = static_cast<std::size_t>(v);
  }
  apply_method(default_config(), m.name);  // rejects unknown names
  return m;
}

std::string MethodSpec::label() const { return pinned_k ? name + ":" + std::to_string(*pinned_k) : name; }

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, std::span<const MethodSpec> methods,
                                std::span<const std::size_t> k_levels, std::span<const std::uint64_t> seeds,
                                bool parallel) {
  if (methods.empty() || seeds.empty()) throw ConfigError("run_sweep: methods and seeds must be non-empty");
  struct Cell {
    std::string method;
    std::size_t k;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& m : methods) {
    std::vector<std::size_t> ks;
    if (m.pinned_k) ks = {*m.pinned_k};
    else ks.assign(k_levels.begin(), k_levels.end());
    if (ks.empty()) throw ConfigError("run_sweep: empty k list for method " + m.name);
    for (auto k : ks)
      for (auto s : seeds) cells.push_back({m.name, k, s});
  }

  std::vector<SweepRow> rows(cells.size());
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
  // Each cell owns its model, optimizer and RNG substreams; rows[i] is written by one thread only.
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& cell = cells[static_cast<std::size_t>(i)];
    SweepRow& row = rows[static_cast<std::size_t>(i)];
    row.method = cell.method;
    row.k = cell.k;
    row.seed = cell.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ExperimentConfig cfg = base;
      cfg.seed = cell.seed;
      cfg.aux.k = cell.k;
      cfg.aux.m = std::max(cfg.aux.m, cell.k);
      cfg = apply_method(cfg, cell.method);
      const ExperimentData data = make_experiment_data(cfg);
      const TrainResult trained = train(cfg, data);
      const RunResult eval = evaluate(trained.model, data.id_test, data.ood_tests, cfg.score);
      row.report = eval.aggregate;
      row.per_set = eval.per_set;
    } catch (const DivergenceError& e) {
      row.status = "diverged: " + csv_safe(e.what());
    } catch (const std::exception& e) {
      row.status = "error: " + csv_safe(e.what());
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return rows;
}

void write_results_csv(std::span<const SweepRow> rows, std::ostream& out) {
  set_precision(out);
  out << "method,k,seed,fpr95,auroc,aupr,id_acc,gamma,wall_ms,status\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.k << ',' << r.seed << ',';
    if (r.status == "ok")
      out << r.report.fpr95 << ',' << r.report.auroc << ',' << r.report.aupr << ',' << r.report.id_acc << ','
          << r.report.gamma;
    else
      out << ",,,,";
    out << ',' << static_cast<long long>(std::llround(r.wall_ms)) << ',' << r.status << '\n';
  }
}

void write_per_set_csv(std::span<const SweepRow> rows, std::ostream& out) {
  set_precision(out);
  out << "method,k,seed,set,fpr95,auroc,aupr,id_acc,gamma\n";
  for (const auto& r : rows)
    for (const auto& s : r.per_set)
      out << r.method << ',' << r.k << ',' << r.seed << ',' << s.set << ',' << s.report.fpr95 << ','
          << s.report.auroc << ',' << s.report.aupr << ',' << s.report.id_acc << ',' << s.report.gamma << '\n';
}

void write_history_csv(std::span<const HistoryRow> history, std::ostream& out) {
  set_precision(out);
  out << "iteration,ce_loss,reg_loss,total_loss\n";
  for (const auto& h : history)
    out << h.iteration << ',' << h.ce_loss << ',' << h.reg_loss << ',' << h.total_loss << '\n';
}

void write_report_csv(const RunResult& result, std::ostream& out) {
  set_precision(out);
  out << "set,fpr95,auroc,aupr,id_acc,gamma\n";
  auto row = [&](const std::string& name, const DetectionReport& r) {
    out << name << ',' << r.fpr95 << ',' << r.auroc << ',' << r.aupr << ',' << r.id_acc << ',' << r.gamma << '\n';
  };
  for (const auto& s : result.per_set) row(s.set, s.report);
  row("aggregate", result.aggregate);
}

void write_scores_csv(std::span<const double> id_scores, std::span<const double> ood_scores, std::ostream& out) {
  set_precision(out);
  out << "source,score\n";
  for (double s : id_scores) out << "id," << s << '\n';
  for (double s : ood_scores) out << "ood," << s << '\n';
}

void write_mix_csv(const MixedBatch& mixed, std::ostream& out) {
  set_precision(out);
  out << "i,j,lambda,x,y\n";
  for (std::size_t t = 0; t < mixed.provenance.size(); ++t) {
    const auto& p = mixed.provenance[t];
    out << p.index_i << ',' << p.index_j << ',' << p.lambda << ',' << mixed.points(t, 0) << ','
        << mixed.points(t, 1) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Score lattice
// ---------------------------------------------------------------------------

std::vector<GridPoint> score_grid(const MlpModel& model, ScoreKind kind, const GridBounds& b,
                                  std::size_t resolution) {
  if (resolution < 2) throw InvalidParameter("score_grid: resolution must be at least 2");
  if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin) || !std::isfinite(b.xmin) || !std::isfinite(b.xmax) ||
      !std::isfinite(b.ymin) || !std::isfinite(b.ymax))
    throw InvalidParameter("score_grid: bounds must satisfy xmin < xmax and ymin < ymax");
  if (model.input_dim() != 2) throw ShapeError("score_grid: model input must be 2-dimensional");
  const double steps = static_cast<double>(resolution - 1);
  Matrix lattice(resolution * resolution, 2);
  for (std::size_t iy = 0; iy < resolution; ++iy)
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const std::size_t r = iy * resolution + ix;
      lattice(r, 0) = ix + 1 == resolution ? b.xmax : b.xmin + (b.xmax - b.xmin) * static_cast<double>(ix) / steps;
      lattice(r, 1) = iy + 1 == resolution ? b.ymax : b.ymin + (b.ymax - b.ymin) * static_cast<double>(iy) / steps;
    }
  const auto scores = score_rows(forward(model, lattice), kind);
  std::vector<GridPoint> grid(lattice.rows);
  for (std::size_t r = 0; r < lattice.rows; ++r) grid[r] = {lattice(r, 0), lattice(r, 1), scores[r]};
  return grid;
}

void write_grid_csv(std::span<const GridPoint> grid, std::ostream& out) {
  set_precision(out);
  out << "x,y,score\n";
  for (const auto& g : grid) out << g.x << ',' << g.y << ',' << g.score << '\n';
}

}  // namespace oodlab
