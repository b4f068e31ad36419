#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "robcomp/dataset.hpp"
#include "robcomp/linalg.hpp"

namespace robcomp {

/// g(x) = C relu(W^lambda ... relu(W^1 x)), no biases. A single-row head is a
/// binary classifier with labels mapped to {-1, +1}.
struct Network {
  std::vector<WeightMatrix> hidden;
  WeightMatrix head;

  std::size_t depth() const { return hidden.size(); }
  std::size_t input_dim() const { return hidden.empty() ? head.cols() : hidden.front().cols(); }
  std::size_t feature_dim() const { return head.cols(); }
  std::size_t outputs() const { return head.rows(); }
  bool is_binary() const { return head.rows() == 1; }

  /// Throws ShapeMismatch when consecutive shapes do not compose.
  void validate() const;

  friend bool operator==(const Network&, const Network&) = default;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded generator.
Network init_network(std::size_t input_dim, std::size_t width, std::size_t depth,
                     std::size_t outputs, std::uint64_t seed);

enum class LossKind { SoftmaxCe, BinaryCe };

LossKind loss_kind_for(const Network& net);

struct ForwardResult {
  Vector logits;
  std::vector<Vector> activations;  // post-ReLU z^1 .. z^lambda
};

ForwardResult forward(const Network& net, const Vector& x);

/// Batched forward: rows of x are inputs. Returns logits (n x outputs).
Matrix logits(const Network& net, const Matrix& x);

/// Encoder output Phi(x) = z^lambda per row (the input itself when lambda = 0).
Matrix features(const Network& net, const Matrix& x);

std::vector<int> predict(const Network& net, const Matrix& x);
double accuracy(const Network& net, const Dataset& data);

/// Per-example loss values.
Vector per_example_loss(const Network& net, const Matrix& x, std::span<const int> labels,
                        LossKind kind);

struct Gradients {
  std::vector<Matrix> hidden;
  Matrix head;

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
};

struct LossAndGrads {
  double loss = 0.0;     // mean over the batch
  Gradients params;      // gradient of the mean loss
  Matrix inputs;         // row i: gradient of example i's own loss w.r.t. its input
};

/// Reverse-mode gradients through the ReLUs (subgradient 0 at exactly 0).
LossAndGrads loss_and_grads(const Network& net, const Matrix& x, std::span<const int> labels,
                            LossKind kind);

/// Input gradients only; skips parameter gradient accumulation.
Matrix input_gradients(const Network& net, const Matrix& x, std::span<const int> labels,
                       LossKind kind, Vector* losses = nullptr);

enum class RegularizerKind { GroupLasso, RatioLasso, Nuclear, SpreadVariance, L1 };

std::string_view to_string(RegularizerKind kind);
RegularizerKind regularizer_kind_from_string(std::string_view name);

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::Nuclear;
  double strength = 0.0;
  double top_fraction = 0.05;  // spread_variance only
};

struct RegularizerValue {
  double value = 0.0;
  std::vector<Matrix> hidden;  // one gradient per hidden layer
};

/// Applied to every hidden layer; the head is never regularized.
RegularizerValue regularizer_value_grad(const RegularizerSpec& spec, const Network& net);

/// Penalty and gradient for one matrix at unit strength.
RegularizerValue regularizer_on_matrix(const RegularizerSpec& spec, const Matrix& w);

/// W scaled to Frobenius norm c. Throws ZeroMatrix.
WeightMatrix frobenius_project(const WeightMatrix& w, double c);

struct AdamWConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;

  static AdamState for_network(const Network& net);
};

/// Decoupled weight decay: p <- p (1 - lr wd) - lr mhat / (sqrt(vhat) + eps).
void adamw_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, long step,
                  const AdamWConfig& cfg);

/// One step over every hidden layer and the head, then Frobenius projection of
/// each hidden layer with a configured target.
void adamw_step(Network& net, const Gradients& grads, AdamState& state, const AdamWConfig& cfg,
                const std::vector<std::optional<double>>& frobenius_targets = {});

}  // namespace robcomp
