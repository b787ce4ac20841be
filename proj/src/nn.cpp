#include "oodlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "oodlab/error.hpp"

namespace oodlab {

namespace {

std::vector<Layer> zero_layers(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw ShapeError("MLP needs at least an input and an output dimension");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw ShapeError("MLP layer dimensions must be positive");
    layers.push_back({Matrix(dims[i], dims[i + 1]), std::vector<double>(dims[i + 1], 0.0)});
  }
  return layers;
}

bool layers_finite(const std::vector<Layer>& layers) {
  for (const auto& l : layers) {
    if (!l.weights.all_finite()) return false;
    if (!std::all_of(l.biases.begin(), l.biases.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

// Pre-activations of every layer; the input is kept separately by the caller.
std::vector<Matrix> forward_cached(const MlpModel& model, const Matrix& batch) {
  if (batch.cols != model.input_dim()) throw ShapeError("forward: batch width differs from model input dimension");
  std::vector<Matrix> pre;
  pre.reserve(model.layers.size());
  const Matrix* input = &batch;
  Matrix hidden;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Matrix z = matmul(*input, model.layers[l].weights);
    add_row_vector(z, model.layers[l].biases);
    pre.push_back(std::move(z));
    if (l + 1 < model.layers.size()) {
      hidden = relu(pre.back());
      input = &hidden;
    }
  }
  return pre;
}

}  // namespace

MlpModel MlpModel::glorot(std::span<const std::size_t> dims, std::size_t num_classes, Rng& rng) {
  MlpModel m = zeros(dims, num_classes);
  for (auto& layer : m.layers) {
    const double fan_in = static_cast<double>(layer.weights.rows);
    const double fan_out = static_cast<double>(layer.weights.cols);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : layer.weights.values) w = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return m;
}

MlpModel MlpModel::zeros(std::span<const std::size_t> dims, std::size_t num_classes) {
  MlpModel m;
  m.layers = zero_layers(dims);
  m.num_classes = num_classes;
  m.validate();
  return m;
}

void MlpModel::validate() const {
  if (layers.empty()) throw ShapeError("MLP has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weights.values.size() != l.weights.rows * l.weights.cols) throw ShapeError("MLP layer storage is inconsistent");
    if (l.biases.size() != l.weights.cols) throw ShapeError("MLP bias length differs from layer width");
    if (i > 0 && layers[i - 1].weights.cols != l.weights.rows) throw ShapeError("MLP layer dimensions do not chain");
  }
  if (num_classes < 2) throw ShapeError("MLP needs at least two classes");
  if (output_dim() != num_classes && output_dim() != num_classes + 1)
    throw ShapeError("MLP output width must be K or K+1");
}

bool MlpModel::all_finite() const { return layers_finite(layers); }

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const auto& l : model.layers)
    g.layers.push_back({Matrix(l.weights.rows, l.weights.cols), std::vector<double>(l.biases.size(), 0.0)});
  return g;
}

bool Gradients::all_finite() const { return layers_finite(layers); }

Matrix forward(const MlpModel& model, const Matrix& batch) {
  auto pre = forward_cached(model, batch);
  return std::move(pre.back());
}

LossAndGrad loss_and_grad(const MlpModel& model, const Matrix& id_points, std::span<const int> id_labels,
                          const Matrix& outlier_points, const RegLossSpec& reg) {
  if (id_points.rows == 0) throw InvalidInput("loss_and_grad: empty ID batch");
  reg.validate();
  const bool wants_head = reg.kind == RegKind::kplus1;
  if (wants_head != model.has_ood_head())
    throw ConfigError(wants_head ? "kplus1 regularizer needs a K+1 output head"
                                 : "model has a K+1 head but the regularizer is not kplus1");
  if (outlier_points.rows > 0 && outlier_points.cols != id_points.cols)
    throw ShapeError("loss_and_grad: outlier batch width differs from ID batch");

  const std::size_t n_id = id_points.rows;
  const std::size_t n_out = outlier_points.rows;
  Matrix batch(n_id + n_out, id_points.cols);
  std::copy(id_points.values.begin(), id_points.values.end(), batch.values.begin());
  std::copy(outlier_points.values.begin(), outlier_points.values.end(), batch.values.begin() + id_points.values.size());

  const auto pre = forward_cached(model, batch);
  const Matrix& logits = pre.back();
  const std::size_t width = logits.cols;

  Matrix id_logits(n_id, width,
                   std::vector<double>(logits.values.begin(), logits.values.begin() + n_id * width));
  Matrix out_logits(n_out, width,
                    std::vector<double>(logits.values.begin() + n_id * width, logits.values.end()));

  LossAndGrad result;
  auto ce = cross_entropy(id_logits, id_labels);
  result.loss.ce = ce.value;

  Matrix dz(n_id + n_out, width);
  std::copy(ce.grad.values.begin(), ce.grad.values.end(), dz.values.begin());
  if (reg.omega > 0.0) {
    auto aux = reg_loss_and_grad(id_logits, out_logits, reg, model.num_classes);
    result.loss.reg = aux.value;
    for (std::size_t i = 0; i < aux.id_grad.values.size(); ++i) dz.values[i] += reg.omega * aux.id_grad.values[i];
    for (std::size_t i = 0; i < aux.outlier_grad.values.size(); ++i)
      dz.values[n_id * width + i] += reg.omega * aux.outlier_grad.values[i];
  }
  result.loss.total = result.loss.ce + reg.omega * result.loss.reg;

  // Reverse pass.
  result.grads = Gradients::zeros_like(model);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Matrix input = l == 0 ? batch : relu(pre[l - 1]);
    result.grads.layers[l].weights = matmul_tn(input, dz);
    result.grads.layers[l].biases = column_sums(dz);
    if (l == 0) break;
    Matrix da = matmul_nt(dz, model.layers[l].weights);
    const Matrix& z_prev = pre[l - 1];
    for (std::size_t i = 0; i < da.values.size(); ++i)
      if (!(z_prev.values[i] > 0.0)) da.values[i] = 0.0;
    dz = std::move(da);
  }
  return result;
}

OptimState OptimState::for_model(const MlpModel& model, double learning_rate, double momentum) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  OptimState s;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.velocity = Gradients::zeros_like(model);
  return s;
}

double OptimState::current_lr() const {
  double lr = learning_rate;
  for (long m : milestones)
    if (step >= m) lr *= decay_factor;
  return lr;
}

void sgd_step(MlpModel& model, const Gradients& grads, OptimState& opt) {
  if (grads.layers.size() != model.layers.size() || opt.velocity.layers.size() != model.layers.size())
    throw ShapeError("sgd_step: gradient tree does not match model");
  if (!grads.all_finite()) throw DivergenceError("sgd_step: non-finite gradient", opt.step);
  const double lr = opt.current_lr();
  const double mu = opt.momentum;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& p = model.layers[l];
    const auto& g = grads.layers[l];
    auto& v = opt.velocity.layers[l];
    if (g.weights.values.size() != p.weights.values.size() || g.biases.size() != p.biases.size() ||
        v.weights.values.size() != p.weights.values.size() || v.biases.size() != p.biases.size())
      throw ShapeError("sgd_step: gradient tree does not match model");
    for (std::size_t i = 0; i < p.weights.values.size(); ++i) {
      v.weights.values[i] = mu * v.weights.values[i] + g.weights.values[i];
      p.weights.values[i] -= lr * v.weights.values[i];
    }
    for (std::size_t i = 0; i < p.biases.size(); ++i) {
      v.biases[i] = mu * v.biases[i] + g.biases[i];
      p.biases[i] -= lr * v.biases[i];
    }
  }
  ++opt.step;
  if (!model.all_finite()) throw DivergenceError("sgd_step: parameters became non-finite", opt.step);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "oodlab-mlp";
constexpr int kCheckpointVersion = 1;

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << std::hexfloat << values[i];
  }
  out << std::defaultfloat << '\n';
}

double read_value(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw InvalidInput("checkpoint: truncated parameter list");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) throw InvalidInput("checkpoint: bad number '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& keyword) {
  std::string token;
  if (!(in >> token) || token != keyword) throw InvalidInput("checkpoint: expected '" + keyword + "'");
}

}  // namespace

void save_checkpoint(const MlpModel& model, std::ostream& out) {
  model.validate();
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "num_classes " << model.num_classes << '\n';
  out << "layers " << model.layers.size() << '\n';
  for (const auto& l : model.layers) {
    out << "layer " << l.weights.rows << ' ' << l.weights.cols << '\n';
    for (std::size_t r = 0; r < l.weights.rows; ++r) write_values(out, l.weights.row(r));
    write_values(out, l.biases);
  }
}

MlpModel load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) throw InvalidInput("checkpoint: missing header");
  if (version != kCheckpointVersion) throw InvalidInput("checkpoint: unsupported version " + std::to_string(version));
  MlpModel m;
  std::size_t n_layers = 0;
  expect(in, "num_classes");
  in >> m.num_classes;
  expect(in, "layers");
  in >> n_layers;
  if (!in || n_layers == 0) throw InvalidInput("checkpoint: bad layer count");
  for (std::size_t l = 0; l < n_layers; ++l) {
    std::size_t rows = 0, cols = 0;
    expect(in, "layer");
    in >> rows >> cols;
    if (!in || rows == 0 || cols == 0) throw InvalidInput("checkpoint: bad layer shape");
    Layer layer{Matrix(rows, cols), std::vector<double>(cols)};
    for (double& v : layer.weights.values) v = read_value(in);
    for (double& v : layer.biases) v = read_value(in);
    m.layers.push_back(std::move(layer));
  }
  m.validate();
  return m;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace oodlab
