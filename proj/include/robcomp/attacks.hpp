#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "robcomp/bounds.hpp"
#include "robcomp/dataset.hpp"
#include "robcomp/network.hpp"

namespace robcomp {

struct AttackConfig {
  NormKind norm = NormKind::Inf;
  double delta = 0.1;
  std::size_t steps = 40;
  std::optional<double> step_size;  // defaults to 2.5 delta / steps
  std::size_t restarts = 5;         // random starts in addition to the FGSM start
  std::uint64_t seed = 0;
  std::optional<std::pair<double, double>> clip_box;  // keep x + a inside [lo, hi]

  double step() const { return step_size ? *step_size : 2.5 * delta / static_cast<double>(steps); }
  /// Throws BadSpec unless delta >= 0 and steps >= 1.
  void validate() const;
};

double perturbation_norm(const Vector& a, NormKind norm);

/// Projects each row of a onto the delta ball (and the clip box around x when set).
void project(Matrix& a, const Matrix& x, const AttackConfig& cfg);

/// One signed (l_inf) or normalized (l2) gradient step of size delta; rows with zero
/// gradient get a zero perturbation.
Matrix fgsm(const Network& net, const Matrix& x, std::span<const int> labels,
            const AttackConfig& cfg);

/// Multi-start projected ascent. Candidates are the zero perturbation, FGSM and every
/// iterate of the runs started from FGSM and from cfg.restarts random points; the
/// highest-loss candidate per example wins.
Matrix pgd(const Network& net, const Matrix& x, std::span<const int> labels,
           const AttackConfig& cfg);

struct SvAlignment {
  Vector projections;  // |v_i^T a| over right singular vectors, descending singular values
  double top_k_fraction = 0.0;
};

SvAlignment sv_alignment(const WeightMatrix& layer, const Vector& a, std::size_t k);

struct AttackOutcome {
  Matrix perturbations;
  double clean_loss = 0.0;
  double adversarial_loss = 0.0;
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  double gap = 0.0;                    // adversarial_loss - clean_loss
  std::vector<double> secants;         // ||Phi(x+a) - Phi(x)||_p / ||a||_p, zero a skipped
  std::vector<double> amplification;   // ||z_adv - z||_2 / ||z||_2, zero z skipped
  std::vector<double> sv_top_fraction; // first-layer top-k singular mass of each a
  Matrix sv_projections;               // row i: |v_j^T a_i|

  double max_secant() const;
  double mean_amplification() const;
  double mean_sv_top_fraction() const;
};

/// PGD over the whole dataset plus diagnostics. sv_k = 0 picks ceil(0.1 * input dim).
AttackOutcome evaluate_robustness(const Network& net, const Dataset& data, const AttackConfig& cfg,
                                  std::size_t sv_k = 0);

struct UaeResult {
  Vector perturbation;
  double fooling_rate = 0.0;
};

/// Fraction of correctly classified examples whose prediction changes at x + u.
double fooling_rate(const Network& net, const Dataset& data, const Vector& u);

/// Universal perturbation: per batch, u <- project(u + step * direction) where the
/// direction is the sign (l_inf) or normalized value (l2) of the mean input gradient at x + u.
UaeResult uae_fgsm(const Network& net, const Dataset& data, const AttackConfig& cfg,
                   std::size_t epochs, std::size_t batch_size = 64);

/// Random sign vector (l_inf) or random direction (l2) of norm delta.
Vector random_perturbation(std::size_t dim, NormKind norm, double delta, std::uint64_t seed);

}  // namespace robcomp
