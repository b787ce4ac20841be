#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "oodlab/numerics.hpp"
#include "oodlab/oodcore.hpp"

namespace oodlab {

/// One affine layer: y = x * weights + biases, weights stored in x out.
struct Layer {
  Matrix weights;
  std::vector<double> biases;

  bool operator==(const Layer&) const = default;
};

/**
 * Fully connected ReLU network producing class logits.
 *
 * `num_classes` is K. The output width is K, or K+1 when the model carries an
 * extra OOD logit for the K+1 regularizer.
 */
struct MlpModel {
  std::vector<Layer> layers;
  std::size_t num_classes = 0;

  /// Glorot-uniform weights, zero biases. `dims` runs input -> hidden... -> output.
  static MlpModel glorot(std::span<const std::size_t> dims, std::size_t num_classes, Rng& rng);
  static MlpModel zeros(std::span<const std::size_t> dims, std::size_t num_classes);

  std::size_t input_dim() const { return layers.front().weights.rows; }
  std::size_t output_dim() const { return layers.back().weights.cols; }
  bool has_ood_head() const { return output_dim() == num_classes + 1; }

  /// Throws ShapeError if consecutive layers do not chain.
  void validate() const;
  bool all_finite() const;

  bool operator==(const MlpModel&) const = default;
};

/// Parameter-shaped tree; used for gradients and momentum buffers.
struct Gradients {
  std::vector<Layer> layers;

  static Gradients zeros_like(const MlpModel& model);
  bool all_finite() const;
};

/// Logits for every row of `batch`.
Matrix forward(const MlpModel& model, const Matrix& batch);

struct LossBreakdown {
  double ce = 0.0;
  double reg = 0.0;   // unweighted L_aux
  double total = 0.0; // ce + omega * reg
};

struct LossAndGrad {
  LossBreakdown loss;
  Gradients grads;
};

/**
 * Mean cross-entropy on the ID batch plus omega * L_aux, with the exact
 * reverse-mode gradient of that total. Both batches share one forward pass.
 * An empty outlier batch is allowed (the outlier side of L_aux is then zero).
 */
LossAndGrad loss_and_grad(const MlpModel& model, const Matrix& id_points, std::span<const int> id_labels,
                          const Matrix& outlier_points, const RegLossSpec& reg);

/// SGD with heavy-ball momentum and an optional step-decay schedule.
struct OptimState {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::vector<long> milestones;  // step indices at which lr is multiplied by decay_factor
  double decay_factor = 0.1;
  long step = 0;
  Gradients velocity;

  static OptimState for_model(const MlpModel& model, double learning_rate, double momentum);
  double current_lr() const;
};

/// v <- momentum * v + g; theta <- theta - lr * v.
/// Throws DivergenceError if the gradient or the updated parameters are not finite.
void sgd_step(MlpModel& model, const Gradients& grads, OptimState& opt);

// Checkpoints are text with hex-float values, so save/load round-trips bit-exactly.
void save_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel load_checkpoint(std::istream& in);
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path);

}  // namespace oodlab
