#include "robcomp/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace robcomp {

void Network::validate() const {
  std::size_t dim = input_dim();
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    if (hidden[l].cols() != dim) {
      throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(l + 1) + " expects input " +
                                                std::to_string(hidden[l].cols()) + ", got " +
                                                std::to_string(dim));
    }
    dim = hidden[l].rows();
  }
  if (head.empty() || head.cols() != dim) {
    throw Error(ErrorKind::ShapeMismatch, "head does not match the feature dimension");
  }
}

Network init_network(std::size_t input_dim, std::size_t width, std::size_t depth,
                     std::size_t outputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform_layer = [&](std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return WeightMatrix(std::move(m));
  };
  Network net;
  std::size_t dim = input_dim;
  for (std::size_t l = 0; l < depth; ++l) {
    net.hidden.push_back(uniform_layer(width, dim));
    dim = width;
  }
  net.head = uniform_layer(outputs, dim);
  return net;
}

LossKind loss_kind_for(const Network& net) {
  return net.is_binary() ? LossKind::BinaryCe : LossKind::SoftmaxCe;
}

namespace {

void check_input(const Network& net, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != net.input_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "input dimension " + std::to_string(cols) +
                                              " != network input " +
                                              std::to_string(net.input_dim()));
  }
}

// Post-activation matrices z^0 = x, z^1 .. z^lambda for a batch.
std::vector<Matrix> forward_batch(const Network& net, const Matrix& x) {
  check_input(net, x.cols());
  std::vector<Matrix> z;
  z.reserve(net.hidden.size() + 1);
  z.push_back(x);
  for (const auto& w : net.hidden) {
    z.push_back((z.back() * w.values().transpose()).cwiseMax(0.0));
  }
  return z;
}

double binary_sign(int label) {
  if (label == 1) return 1.0;
  if (label == 0 || label == -1) return -1.0;
  throw Error(ErrorKind::NonBinaryLabels, "binary label " + std::to_string(label));
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Per-example losses and dloss/dlogits (not averaged).
void loss_head(const Matrix& s, std::span<const int> labels, LossKind kind, Vector& losses,
               Matrix& dlogits) {
  const Eigen::Index n = s.rows();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw Error(ErrorKind::ShapeMismatch, "label count does not match batch");
  }
  losses.resize(n);
  dlogits.resize(n, s.cols());
  if (kind == LossKind::BinaryCe) {
    if (s.cols() != 1) throw Error(ErrorKind::ShapeMismatch, "binary loss needs one logit");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = binary_sign(labels[static_cast<std::size_t>(i)]);
      const double t = -y * s(i, 0);
      losses(i) = softplus(t);
      dlogits(i, 0) = -y * sigmoid(t);
    }
    return;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= s.cols()) {
      throw Error(ErrorKind::ShapeMismatch, "label " + std::to_string(y) + " out of range");
    }
    const double mx = s.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (s.row(i).array() - mx).exp().matrix();
    const double z = e.sum();
    losses(i) = mx + std::log(z) - s(i, y);
    dlogits.row(i) = e / z;
    dlogits(i, y) -= 1.0;
  }
}

struct Backprop {
  Vector losses;
  Gradients params;  // un-averaged sums
  Matrix inputs;
};

Backprop backprop(const Network& net, const Matrix& x, std::span<const int> labels, LossKind kind,
                  bool want_params) {
  const auto z = forward_batch(net, x);
  const Matrix s = z.back() * net.head.values().transpose();
  Backprop out;
  Matrix delta;
  loss_head(s, labels, kind, out.losses, delta);
  if (want_params) {
    out.params.head = delta.transpose() * z.back();
    out.params.hidden.resize(net.hidden.size());
  }
  Matrix g = delta * net.head.values();  // d loss / d z^lambda
  for (std::size_t l = net.hidden.size(); l-- > 0;) {
    g = g.cwiseProduct((z[l + 1].array() > 0.0).cast<double>().matrix());  // through ReLU
    if (want_params) out.params.hidden[l] = g.transpose() * z[l];
    g = g * net.hidden[l].values();
  }
  out.inputs = std::move(g);
  return out;
}

}  // namespace

ForwardResult forward(const Network& net, const Vector& x) {
  Matrix row = x.transpose();
  const auto z = forward_batch(net, row);
  ForwardResult out;
  for (std::size_t l = 1; l < z.size(); ++l) out.activations.push_back(z[l].row(0).transpose());
  out.logits = net.head.values() * z.back().row(0).transpose();
  return out;
}

Matrix logits(const Network& net, const Matrix& x) {
  return forward_batch(net, x).back() * net.head.values().transpose();
}

Matrix features(const Network& net, const Matrix& x) { return forward_batch(net, x).back(); }

std::vector<int> predict(const Network& net, const Matrix& x) {
  const Matrix s = logits(net, x);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if (s.cols() == 1) {
      out[static_cast<std::size_t>(i)] = s(i, 0) > 0.0 ? 1 : 0;
    } else {
      Eigen::Index arg = 0;
      s.row(i).maxCoeff(&arg);
      out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
  }
  return out;
}

double accuracy(const Network& net, const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "accuracy on an empty dataset");
  const auto pred = predict(net, data.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int y = net.is_binary() ? (data.labels[i] == 1 ? 1 : 0) : data.labels[i];
    hits += pred[i] == y ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Vector per_example_loss(const Network& net, const Matrix& x, std::span<const int> labels,
                        LossKind kind) {
  Vector losses;
  Matrix d;
  loss_head(logits(net, x), labels, kind, losses, d);
  return losses;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& w : net.hidden) g.hidden.push_back(Matrix::Zero(w.values().rows(), w.values().cols()));
  g.head = Matrix::Zero(net.head.values().rows(), net.head.values().cols());
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t l = 0; l < hidden.size(); ++l) hidden[l] += other.hidden[l];
  head += other.head;
  return *this;
}

LossAndGrads loss_and_grads(const Network& net, const Matrix& x, std::span<const int> labels,
                            LossKind kind) {
  auto bp = backprop(net, x, labels, kind, true);
  const double n = static_cast<double>(x.rows());
  LossAndGrads out;
  out.loss = bp.losses.mean();
  out.params = std::move(bp.params);
  for (auto& g : out.params.hidden) g /= n;
  out.params.head /= n;
  out.inputs = std::move(bp.inputs);
  return out;
}

Matrix input_gradients(const Network& net, const Matrix& x, std::span<const int> labels,
                       LossKind kind, Vector* losses) {
  auto bp = backprop(net, x, labels, kind, false);
  if (losses != nullptr) *losses = std::move(bp.losses);
  return std::move(bp.inputs);
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::GroupLasso: return "group_lasso";
    case RegularizerKind::RatioLasso: return "ratio_lasso";
    case RegularizerKind::Nuclear: return "nuclear";
    case RegularizerKind::SpreadVariance: return "spread_variance";
    case RegularizerKind::L1: return "l1";
  }
  return "nuclear";
}

RegularizerKind regularizer_kind_from_string(std::string_view name) {
  if (name == "group_lasso") return RegularizerKind::GroupLasso;
  if (name == "ratio_lasso") return RegularizerKind::RatioLasso;
  if (name == "nuclear") return RegularizerKind::Nuclear;
  if (name == "spread_variance") return RegularizerKind::SpreadVariance;
  if (name == "l1") return RegularizerKind::L1;
  throw Error(ErrorKind::BadSpec, "unknown regularizer '" + std::string(name) + "'");
}

RegularizerValue regularizer_on_matrix(const RegularizerSpec& spec, const Matrix& w) {
  RegularizerValue out;
  Matrix grad = Matrix::Zero(w.rows(), w.cols());
  const Vector row_norms = w.rowwise().norm();
  switch (spec.kind) {
    case RegularizerKind::GroupLasso: {
      out.value = row_norms.sum();
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (row_norms(i) > 0.0) grad.row(i) = w.row(i) / row_norms(i);
      }
      break;
    }
    case RegularizerKind::RatioLasso: {
      const double sum = row_norms.sum();
      const double fro = row_norms.norm();
      if (fro == 0.0) break;
      out.value = sum / fro;
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        if (row_norms(i) > 0.0) grad.row(i) = w.row(i) / (row_norms(i) * fro);
      }
      grad -= (sum / (fro * fro * fro)) * w;
      break;
    }
    case RegularizerKind::Nuclear: {
      const auto f = svd(w);
      out.value = f.singular_values.sum();
      grad = f.left * f.right.transpose();
      break;
    }
    case RegularizerKind::SpreadVariance: {
      const auto rows = static_cast<std::size_t>(w.rows());
      const auto m = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::ceil(spec.top_fraction * static_cast<double>(rows) - 1e-12)),
          1, rows);
      std::vector<Eigen::Index> order(rows);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return row_norms(a) > row_norms(b); });
      double mean = 0.0;
      for (std::size_t i = 0; i < m; ++i) mean += row_norms(order[i]);
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = row_norms(order[i]) - mean;
        var += d * d;
      }
      out.value = var / static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Index r = order[i];
        if (row_norms(r) > 0.0) {
          grad.row(r) = (2.0 / static_cast<double>(m)) * (row_norms(r) - mean) * w.row(r) / row_norms(r);
        }
      }
      break;
    }
    case RegularizerKind::L1: {
      out.value = w.cwiseAbs().sum();
      grad = w.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      break;
    }
  }
  out.hidden.push_back(std::move(grad));
  return out;
}

RegularizerValue regularizer_value_grad(const RegularizerSpec& spec, const Network& net) {
  RegularizerValue out;
  for (const auto& w : net.hidden) {
    if (spec.strength == 0.0) {
      out.hidden.push_back(Matrix::Zero(w.values().rows(), w.values().cols()));
      continue;
    }
    auto one = regularizer_on_matrix(spec, w.values());
    out.value += spec.strength * one.value;
    out.hidden.push_back(spec.strength * one.hidden.front());
  }
  return out;
}

WeightMatrix frobenius_project(const WeightMatrix& w, double c) {
  const double norm = frobenius_norm(w);
  if (norm == 0.0) throw Error(ErrorKind::ZeroMatrix, "cannot rescale a zero matrix");
  if (!(c > 0.0)) throw Error(ErrorKind::BadSpec, "Frobenius target must be positive");
  return WeightMatrix(w.values() * (c / norm));
}

AdamState AdamState::for_network(const Network& net) {
  AdamState s;
  auto add = [&](const WeightMatrix& w) {
    s.m.push_back(Matrix::Zero(w.values().rows(), w.values().cols()));
    s.v.push_back(Matrix::Zero(w.values().rows(), w.values().cols()));
  };
  for (const auto& w : net.hidden) add(w);
  add(net.head);
  return s;
}

void adamw_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, long step,
                  const AdamWConfig& cfg) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param *= (1.0 - cfg.learning_rate * cfg.weight_decay);
  param.array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

void adamw_step(Network& net, const Gradients& grads, AdamState& state, const AdamWConfig& cfg,
                const std::vector<std::optional<double>>& frobenius_targets) {
  ++state.step;
  const std::size_t depth = net.hidden.size();
  for (std::size_t l = 0; l < depth; ++l) {
    adamw_update(net.hidden[l].mutable_values(), grads.hidden[l], state.m[l], state.v[l], state.step, cfg);
  }
  adamw_update(net.head.mutable_values(), grads.head, state.m[depth], state.v[depth], state.step, cfg);
  for (std::size_t l = 0; l < depth && l < frobenius_targets.size(); ++l) {
    if (frobenius_targets[l]) net.hidden[l] = frobenius_project(net.hidden[l], *frobenius_targets[l]);
  }
}

}  // namespace robcomp
