#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "oodlab/error.hpp"
#include "oodlab/harness.hpp"

namespace oodlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

TestOodGeometry parse_test_set(const json& j, const std::string& where) {
  check_keys(j, {"name", "ring_components", "ring_radius", "ring_sigma", "phase", "far_inner", "far_outer",
                 "ring_fraction"},
             where);
  TestOodGeometry g;
  read(j, "ring_components", g.ring_components, where);
  g.phase = std::numbers::pi / static_cast<double>(std::max<std::size_t>(g.ring_components, 1));
  read(j, "ring_radius", g.ring_radius, where);
  read(j, "ring_sigma", g.ring_sigma, where);
  read(j, "phase", g.phase, where);
  read(j, "far_inner", g.far_inner, where);
  read(j, "far_outer", g.far_outer, where);
  read(j, "ring_fraction", g.ring_fraction, where);
  return g;
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

std::vector<std::size_t> ExperimentConfig::layer_dims() const {
  std::vector<std::size_t> dims{2};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim());
  return dims;
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(outlier_ratio > 0.0) || !std::isfinite(outlier_ratio)) throw ConfigError("outlier_ratio must be positive");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
  if (id.geometry.num_classes < 2) throw ConfigError("id.num_classes must be at least 2");
  if (id.train_per_class == 0 || id.test_per_class == 0) throw ConfigError("id sample counts must be positive");
  if (!(id.geometry.sigma >= 0.0)) throw ConfigError("id.sigma must be non-negative");
  if (aux.k == 0 || aux.m < aux.k) throw ConfigError("aux needs k >= 1 and m >= k");
  if (test_ood.m == 0) throw ConfigError("test_ood.m must be positive");
  if (test_ood.sets.empty()) throw ConfigError("test_ood.sets must not be empty");
  for (const auto& [name, g] : test_ood.sets) {
    if (g.ring_components == 0) throw ConfigError("test_ood." + name + ": ring_components must be positive");
    if (!(g.ring_fraction >= 0.0 && g.ring_fraction <= 1.0))
      throw ConfigError("test_ood." + name + ": ring_fraction must be in [0, 1]");
    if (!(g.far_inner > 0.0 && g.far_outer > g.far_inner))
      throw ConfigError("test_ood." + name + ": far-field annulus needs 0 < far_inner < far_outer");
  }
  for (auto h : hidden)
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("optimizer.learning_rate must be non-negative");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw ConfigError("optimizer.momentum must be in [0, 1)");
  try {
    mix.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  reg.validate();
  if ((score == ScoreKind::kplus1) != (reg.kind == RegKind::kplus1))
    throw ConfigError("the kplus1 score and the kplus1 regularizer must be used together");
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"seed", "id", "aux", "test_ood", "model", "optimizer", "iterations", "batch_size",
                    "outlier_ratio", "use_outliers", "mix", "reg", "score", "log_every"},
             "config");
  ExperimentConfig c = default_config();
  read(root, "seed", c.seed, "config");
  read(root, "iterations", c.iterations, "config");
  read(root, "batch_size", c.batch_size, "config");
  read(root, "outlier_ratio", c.outlier_ratio, "config");
  read(root, "use_outliers", c.use_outliers, "config");
  read(root, "log_every", c.log_every, "config");

  if (root.contains("id")) {
    const auto& j = root["id"];
    check_keys(j, {"num_classes", "radius", "sigma", "train_per_class", "test_per_class"}, "id");
    read(j, "num_classes", c.id.geometry.num_classes, "id");
    read(j, "radius", c.id.geometry.radius, "id");
    read(j, "sigma", c.id.geometry.sigma, "id");
    read(j, "train_per_class", c.id.train_per_class, "id");
    read(j, "test_per_class", c.id.test_per_class, "id");
  }
  if (root.contains("aux")) {
    const auto& j = root["aux"];
    check_keys(j, {"k", "m", "radius", "sigma", "phase"}, "aux");
    read(j, "k", c.aux.k, "aux");
    read(j, "m", c.aux.m, "aux");
    read(j, "radius", c.aux.geometry.radius, "aux");
    read(j, "sigma", c.aux.geometry.sigma, "aux");
    read(j, "phase", c.aux.geometry.phase, "aux");
  }
  if (root.contains("test_ood")) {
    const auto& j = root["test_ood"];
    check_keys(j, {"m", "sets"}, "test_ood");
    read(j, "m", c.test_ood.m, "test_ood");
    if (j.contains("sets")) {
      if (!j["sets"].is_array()) throw ConfigError("test_ood.sets must be an array");
      c.test_ood.sets.clear();
      for (const auto& s : j["sets"]) {
        if (!s.is_object() || !s.contains("name") || !s["name"].is_string())
          throw ConfigError("test_ood.sets entries need a string 'name'");
        const auto name = s["name"].get<std::string>();
        c.test_ood.sets.emplace_back(name, parse_test_set(s, "test_ood.sets." + name));
      }
    }
  }
  if (root.contains("model")) {
    const auto& j = root["model"];
    check_keys(j, {"hidden"}, "model");
    read(j, "hidden", c.hidden, "model");
  }
  if (root.contains("optimizer")) {
    const auto& j = root["optimizer"];
    check_keys(j, {"learning_rate", "momentum", "milestones", "decay_factor"}, "optimizer");
    read(j, "learning_rate", c.optimizer.learning_rate, "optimizer");
    read(j, "momentum", c.optimizer.momentum, "optimizer");
    read(j, "milestones", c.optimizer.milestones, "optimizer");
    read(j, "decay_factor", c.optimizer.decay_factor, "optimizer");
  }
  if (root.contains("mix")) {
    const auto& j = root["mix"];
    check_keys(j, {"kind", "alpha", "temperature"}, "mix");
    std::string kind(to_string(c.mix.kind));
    read(j, "kind", kind, "mix");
    c.mix.kind = parse_mix_kind(kind);
    read(j, "alpha", c.mix.alpha, "mix");
    read(j, "temperature", c.mix.temperature, "mix");
  }
  if (root.contains("reg")) {
    const auto& j = root["reg"];
    check_keys(j, {"kind", "omega", "m_in", "m_out"}, "reg");
    std::string kind(to_string(c.reg.kind));
    read(j, "kind", kind, "reg");
    c.reg.kind = parse_reg_kind(kind);
    read(j, "omega", c.reg.omega, "reg");
    read(j, "m_in", c.reg.m_in, "reg");
    read(j, "m_out", c.reg.m_out, "reg");
  }
  if (root.contains("score")) {
    std::string s;
    read(root, "score", s, "config");
    c.score = parse_score_kind(s);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json sets = json::array();
  for (const auto& [name, g] : c.test_ood.sets)
    sets.push_back({{"name", name},
                    {"ring_components", g.ring_components},
                    {"ring_radius", g.ring_radius},
                    {"ring_sigma", g.ring_sigma},
                    {"phase", g.phase},
                    {"far_inner", g.far_inner},
                    {"far_outer", g.far_outer},
                    {"ring_fraction", g.ring_fraction}});
  json j = {
      {"seed", c.seed},
      {"id",
       {{"num_classes", c.id.geometry.num_classes},
        {"radius", c.id.geometry.radius},
        {"sigma", c.id.geometry.sigma},
        {"train_per_class", c.id.train_per_class},
        {"test_per_class", c.id.test_per_class}}},
      {"aux",
       {{"k", c.aux.k},
        {"m", c.aux.m},
        {"radius", c.aux.geometry.radius},
        {"sigma", c.aux.geometry.sigma},
        {"phase", c.aux.geometry.phase}}},
      {"test_ood", {{"m", c.test_ood.m}, {"sets", sets}}},
      {"model", {{"hidden", c.hidden}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"momentum", c.optimizer.momentum},
        {"milestones", c.optimizer.milestones},
        {"decay_factor", c.optimizer.decay_factor}}},
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"outlier_ratio", c.outlier_ratio},
      {"use_outliers", c.use_outliers},
      {"mix", {{"kind", to_string(c.mix.kind)}, {"alpha", c.mix.alpha}, {"temperature", c.mix.temperature}}},
      {"reg", {{"kind", to_string(c.reg.kind)}, {"omega", c.reg.omega}, {"m_in", c.reg.m_in}, {"m_out", c.reg.m_out}}},
      {"score", to_string(c.score)},
      {"log_every", c.log_every},
  };
  return j.dump(2);
}

ExperimentConfig apply_method(ExperimentConfig base, std::string_view method) {
  if (method == "no-aux") {
    base.use_outliers = false;
    base.mix.kind = MixKind::none;
    base.reg.omega = 0.0;
  } else if (method == "aux") {
    base.use_outliers = true;
    base.mix.kind = MixKind::none;
  } else if (method == "vanilla") {
    base.use_outliers = true;
    base.mix.kind = MixKind::vanilla;
  } else if (method == "diversemix") {
    base.use_outliers = true;
    base.mix.kind = MixKind::diversemix;
  } else if (method == "cutmask") {
    base.use_outliers = true;
    base.mix.kind = MixKind::cutmask;
  } else {
    throw ConfigError("unknown method '" + std::string(method) + "'");
  }
  base.validate();
  return base;
}

}  // namespace oodlab
