// oodlab command line: train / eval / grid / sweep / data.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 training divergence.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oodlab/error.hpp"
#include "oodlab/harness.hpp"

namespace fs = std::filesystem;
using namespace oodlab;

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& tok : split(s, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != tok.size()) throw ConfigError(std::string("bad ") + what + " entry '" + tok + "'");
    out.push_back(static_cast<T>(v));
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw InvalidInput("cannot write " + p.string());
  return out;
}

ExperimentConfig config_from(const std::string& path) { return path.empty() ? default_config() : load_config(path); }

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& method,
              const fs::path& out_dir, const std::string& dump_mix, long dump_mix_iter) {
  ExperimentConfig cfg = config_from(config_path);
  if (seed) cfg.seed = *seed;
  if (!method.empty()) cfg = apply_method(cfg, method);
  fs::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentData data = make_experiment_data(cfg);
  TrainHooks hooks;
  if (!dump_mix.empty())
    hooks.on_mix = [&](long it, const MixedBatch& mixed) {
      if (it != dump_mix_iter) return;
      auto f = open_out(dump_mix);
      write_mix_csv(mixed, f);
    };
  const TrainResult trained = train(cfg, data, hooks);
  RunResult result = evaluate(trained.model, data.id_test, data.ood_tests, cfg.score);
  result.history = trained.history;
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  save_checkpoint(trained.model, out_dir / "model.ckpt");
  {
    auto f = open_out(out_dir / "history.csv");
    write_history_csv(trained.history, f);
  }
  {
    auto f = open_out(out_dir / "report.csv");
    write_report_csv(result, f);
  }
  {
    auto f = open_out(out_dir / "config.json");
    f << config_to_json(cfg) << '\n';
  }
  std::cout << "fpr95=" << result.aggregate.fpr95 << " auroc=" << result.aggregate.auroc
            << " aupr=" << result.aggregate.aupr << " id_acc=" << result.aggregate.id_acc << " ("
            << static_cast<long>(result.wall_ms) << " ms)\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& config_path, std::optional<std::uint64_t> seed,
             const fs::path& out_dir) {
  ExperimentConfig cfg = config_from(config_path);
  if (seed) cfg.seed = *seed;
  const MlpModel model = load_checkpoint(fs::path(checkpoint));
  if (model.num_classes != cfg.num_classes() || model.output_dim() != cfg.output_dim())
    throw ConfigError("checkpoint head does not match the config's classes/regularizer");
  const ExperimentData data = make_experiment_data(cfg);
  const RunResult result = evaluate(model, data.id_test, data.ood_tests, cfg.score);

  fs::create_directories(out_dir);
  {
    auto f = open_out(out_dir / "report.csv");
    write_report_csv(result, f);
  }
  const auto id_scores = score_rows(forward(model, data.id_test.points), cfg.score);
  for (const auto& [name, set] : data.ood_tests) {
    auto f = open_out(out_dir / ("scores_" + name + ".csv"));
    write_scores_csv(id_scores, score_rows(forward(model, set.points), cfg.score), f);
  }
  std::cout << "fpr95=" << result.aggregate.fpr95 << " auroc=" << result.aggregate.auroc
            << " aupr=" << result.aggregate.aupr << " id_acc=" << result.aggregate.id_acc << '\n';
  return 0;
}

int run_grid(const std::string& checkpoint, const std::string& bounds_text, std::size_t res,
             const std::string& score_name, const fs::path& out) {
  const auto parts = split(bounds_text, ',');
  if (parts.size() != 4) throw ConfigError("--bounds needs xmin,xmax,ymin,ymax");
  GridBounds b{};
  try {
    b = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
  } catch (const std::logic_error&) {
    throw ConfigError("--bounds entries must be numbers");
  }
  const MlpModel model = load_checkpoint(fs::path(checkpoint));
  ScoreKind kind = parse_score_kind(score_name.empty() ? (model.has_ood_head() ? "kplus1" : "energy") : score_name);
  const auto grid = score_grid(model, kind, b, res);
  auto f = open_out(out);
  write_grid_csv(grid, f);
  return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& methods_text, const std::string& k_text,
                  const std::string& seeds_text, const fs::path& out_dir, bool serial) {
  const ExperimentConfig cfg = config_from(config_path);
  std::vector<MethodSpec> methods;
  for (const auto& tok : split(methods_text, ',')) methods.push_back(MethodSpec::parse(tok));
  if (methods.empty()) throw ConfigError("empty --methods list");
  const auto ks = parse_list<std::size_t>(k_text, "--k");
  const auto seeds = parse_list<std::uint64_t>(seeds_text, "--seeds");

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_sweep(cfg, methods, ks, seeds, !serial);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  {
    auto f = open_out(out_dir / "results.csv");
    write_results_csv(rows, f);
  }
  {
    auto f = open_out(out_dir / "results_by_set.csv");
    write_per_set_csv(rows, f);
  }
  {
    auto f = open_out(out_dir / "config.json");
    f << config_to_json(cfg) << '\n';
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  std::cout << rows.size() << " cells, " << failed << " failed, " << static_cast<long>(ms) << " ms\n";
  return 0;
}

int run_data(const std::string& config_path, std::optional<std::uint64_t> seed, const fs::path& out_dir) {
  ExperimentConfig cfg = config_from(config_path);
  if (seed) cfg.seed = *seed;
  const ExperimentData data = make_experiment_data(cfg);
  fs::create_directories(out_dir);
  auto f1 = open_out(out_dir / "id_train.csv");
  write_csv(data.id_train, f1);
  auto f2 = open_out(out_dir / "id_test.csv");
  write_csv(data.id_test, f2);
  auto f3 = open_out(out_dir / "aux.csv");
  write_csv(data.aux, f3);
  for (const auto& [name, set] : data.ood_tests) {
    auto f = open_out(out_dir / ("ood_" + name + ".csv"));
    write_csv(set, f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oodlab: outlier-mixing OOD detection on synthetic 2-D data"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, method, dump_mix, bounds, score_name, methods_text, k_text, seeds_text;
  std::string out;
  std::uint64_t seed_value = 0;
  long dump_mix_iter = 0;
  std::size_t res = 0;
  bool serial = false;

  auto* train_cmd = app.add_subcommand("train", "Train one model, write checkpoint, history and report");
  train_cmd->add_option("--config", config_path, "JSON config (defaults if omitted)");
  auto* train_seed = train_cmd->add_option("--seed", seed_value, "Override config seed");
  train_cmd->add_option("--method", method, "Apply a method preset: no-aux, aux, vanilla, diversemix, cutmask");
  train_cmd->add_option("--out", out, "Output directory")->required();
  train_cmd->add_option("--dump-mix", dump_mix, "Write one iteration's mixed batch as CSV i,j,lambda,x,y");
  train_cmd->add_option("--dump-mix-iter", dump_mix_iter, "Iteration to dump (default 0)");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on freshly generated test sets");
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--config", config_path, "JSON config (defaults if omitted)");
  auto* eval_seed = eval_cmd->add_option("--seed", seed_value, "Override config seed");
  eval_cmd->add_option("--out", out, "Output directory")->required();

  auto* grid_cmd = app.add_subcommand("grid", "Export the score on a regular lattice");
  grid_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  grid_cmd->add_option("--bounds", bounds, "xmin,xmax,ymin,ymax")->required();
  grid_cmd->add_option("--res", res, "Points per axis (>= 2)")->required();
  grid_cmd->add_option("--score", score_name, "energy, msp or kplus1");
  grid_cmd->add_option("--out", out, "Output CSV file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate a method x k x seed grid");
  sweep_cmd->add_option("--config", config_path, "Base JSON config (defaults if omitted)");
  sweep_cmd->add_option("--methods", methods_text, "Comma list; 'aux:1000' pins k for that method")->required();
  sweep_cmd->add_option("--k", k_text, "Comma list of auxiliary component counts")->required();
  sweep_cmd->add_option("--seeds", seeds_text, "Comma list of seeds")->required();
  sweep_cmd->add_option("--out", out, "Output directory")->required();
  sweep_cmd->add_flag("--serial", serial, "Run cells one after another");

  auto* data_cmd = app.add_subcommand("data", "Export the generated datasets as CSV");
  data_cmd->add_option("--config", config_path, "JSON config (defaults if omitted)");
  auto* data_seed = data_cmd->add_option("--seed", seed_value, "Override config seed");
  data_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  auto seed_if = [&](CLI::Option* opt) -> std::optional<std::uint64_t> {
    if (opt->count() > 0) return seed_value;
    return std::nullopt;
  };

  try {
    if (*train_cmd) return run_train(config_path, seed_if(train_seed), method, out, dump_mix, dump_mix_iter);
    if (*eval_cmd) return run_eval(checkpoint, config_path, seed_if(eval_seed), out);
    if (*grid_cmd) return run_grid(checkpoint, bounds, res, score_name, out);
    if (*sweep_cmd) return run_sweep_cmd(config_path, methods_text, k_text, seeds_text, out, serial);
    if (*data_cmd) return run_data(config_path, seed_if(data_seed), out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
