#include "robcomp/reports.hpp"

#include <algorithm>
#include <cmath>

#include "robcomp/compressibility.hpp"

namespace robcomp {

namespace {

Json nullable(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

Json summary(const std::vector<double>& v) {
  if (v.empty()) return {{"count", 0}, {"mean", nullptr}, {"max", nullptr}};
  double sum = 0.0;
  for (double x : v) sum += x;
  return {{"count", v.size()},
          {"mean", sum / static_cast<double>(v.size())},
          {"max", *std::max_element(v.begin(), v.end())}};
}

Json profile_json(const CompressibilityProfile& p) {
  return {{"q", p.q}, {"k", p.k}, {"epsilon", p.epsilon}, {"beta", p.beta}};
}

}  // namespace

Json audit_to_json(const Network& net, const KConfig& kcfg) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < net.depth(); ++l) {
    const WeightMatrix& w = net.hidden[l];
    const LayerK k = kcfg.resolve(l, w);
    const StructureVectors sv = structure_vectors(w);
    Json entry;
    entry["layer"] = l + 1;
    entry["rows"] = w.rows();
    entry["cols"] = w.cols();
    entry["frobenius"] = frobenius_norm(w);
    entry["op_norm_inf"] = op_norm_inf(w);
    entry["op_norm_2"] = sv.sigma(0);
    entry["row"] = profile_json(profile(sv, w, StructureKind::Row, k.k));
    entry["spectral"] = profile_json(profile(sv, w, StructureKind::Spectral,
                                             std::min<std::size_t>(k.k, static_cast<std::size_t>(sv.sigma.size()))));
    entry["within_row"] = profile_json(profile(sv, w, StructureKind::WithinRow, k.k_r));
    entry["pq_index_nu"] = pq_index(as_span(sv.nu), 1.0, 2.0);
    entry["pq_index_sigma"] = pq_index(as_span(sv.sigma), 1.0, 2.0);
    try {
      entry["thm1a_bound"] = bound_opnorm_inf(w, k.k, k.k_r, kcfg.square);
    } catch (const Error& e) {
      entry["thm1a_bound"] = nullptr;
      entry["thm1a_error"] = {{"kind", to_string(e.kind())}, {"message", e.detail()}};
    }
    try {
      entry["thm1b_bound"] = bound_opnorm_2(w, k.k, kcfg.square);
    } catch (const Error& e) {
      entry["thm1b_bound"] = nullptr;
      entry["thm1b_error"] = {{"kind", to_string(e.kind())}, {"message", e.detail()}};
    }
    layers.push_back(std::move(entry));
  }
  return {{"layers", std::move(layers)}};
}

Json to_json(const AlignmentFactor& f) {
  return {{"value", f.value},
          {"raw_max", f.raw_max},
          {"remainder", f.remainder},
          {"method", to_string(f.method)},
          {"evaluations", f.evaluations}};
}

Json to_json(const BoundReport& report) {
  const bool inf = report.norm == NormKind::Inf;
  Json j;
  j["norm"] = to_string(report.norm);
  Json layers = Json::array();
  for (const auto& b : report.per_layer) {
    Json e;
    e["layer"] = b.layer;
    e[inf ? "thm1a_bound" : "thm1b_bound"] = b.bound;
    e["actual_norm"] = b.actual;
    e[inf ? "epsilon_nu" : "epsilon_sigma"] = b.epsilon;
    e[inf ? "beta_nu" : "beta_sigma"] = b.beta;
    if (inf) {
      e["epsilon_r"] = b.epsilon_r;
      e["k_r"] = b.k_r;
    }
    e["k"] = b.k;
    layers.push_back(std::move(e));
  }
  j["per_layer"] = std::move(layers);
  Json align = Json::array();
  for (std::size_t i = 0; i < report.alignment_factors.size(); ++i) {
    Json e = to_json(report.alignment_factors[i]);
    e["pair"] = Json::array({i + 1, i + 2});
    align.push_back(std::move(e));
  }
  j["alignment"] = std::move(align);
  if (inf) j["s_opt"] = report.s_opt;
  j["layer_product"] = report.layer_product;
  j[inf ? "eq8_product" : "eq9_product"] = report.alignment_product;
  j["lipschitz_bound"] = report.lipschitz_bound;
  if (report.risk_bound) {
    j["cor1_rhs"] = *report.risk_bound;
    j["clean_risk"] = nullable(report.clean_risk);
    j["head_dual_norm"] = nullable(report.head_dual_norm);
    j["dual_norm"] = inf ? "l1" : "l2";
  }
  Json flags = Json::array();
  if (report.conservative_extension) flags.push_back("conservative-extension");
  if (report.risk_bound) flags.push_back("risk-bound-uses-head-vector");
  j["flags"] = std::move(flags);
  return j;
}

Json to_json(const AttackConfig& cfg) {
  Json j = {{"attack", "pgd-multistart"},
            {"norm", to_string(cfg.norm)},
            {"delta", cfg.delta},
            {"steps", cfg.steps},
            {"step_size", cfg.step()},
            {"restarts", cfg.restarts},
            {"seed", cfg.seed}};
  if (cfg.clip_box) j["clip_box"] = Json::array({cfg.clip_box->first, cfg.clip_box->second});
  return j;
}

Json to_json(const AttackOutcome& o, bool per_example) {
  Json j;
  j["clean_loss"] = o.clean_loss;
  j["adversarial_loss"] = o.adversarial_loss;
  j["gap"] = o.gap;
  j["clean_accuracy"] = o.clean_accuracy;
  j["robust_accuracy"] = o.robust_accuracy;
  j["secant"] = summary(o.secants);
  j["amplification"] = summary(o.amplification);
  j["sv_top_fraction"] = summary(o.sv_top_fraction);
  if (per_example) {
    j["per_example"] = {{"secants", o.secants},
                        {"amplification", o.amplification},
                        {"sv_top_fraction", o.sv_top_fraction}};
  }
  return j;
}

Json to_json(const UaeResult& uae) {
  double linf = 0.0;
  if (uae.perturbation.size() > 0) linf = uae.perturbation.cwiseAbs().maxCoeff();
  return {{"method", "uae-fgsm-aggregate"},
          {"fooling_rate", uae.fooling_rate},
          {"norm_inf", linf},
          {"norm_2", uae.perturbation.norm()}};
}

Json to_json(const PruningPlan& plan) {
  return {{"kind", to_string(plan.kind)},
          {"per_layer_k", plan.per_layer_k},
          {"target_ratio", plan.target_ratio},
          {"epsilon", nullable(plan.epsilon)},
          {"achieved_ratio", plan.achieved_ratio},
          {"gap", plan.gap()}};
}

Json to_json(const std::vector<RetentionPoint>& curve) {
  Json arr = Json::array();
  for (const auto& p : curve) {
    arr.push_back({{"target_ratio", p.target_ratio},
                   {"achieved_ratio", p.achieved_ratio},
                   {"clean_acc", p.clean_acc},
                   {"robust_acc", nullable(p.robust_acc)}});
  }
  return arr;
}

Json to_json(const std::vector<EpochRecord>& history) {
  Json arr = Json::array();
  for (const auto& r : history) {
    auto clean = [](const std::vector<double>& v) {
      Json a = Json::array();
      for (double x : v) a.push_back(std::isnan(x) ? Json(nullptr) : Json(x));
      return a;
    };
    arr.push_back({{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss},
                   {"clean_acc", r.clean_acc},
                   {"robust_acc", nullable(r.robust_acc)},
                   {"eps_sigma", clean(r.eps_sigma)},
                   {"eps_nu", clean(r.eps_nu)},
                   {"frobenius", clean(r.frobenius)}});
  }
  return arr;
}

}  // namespace robcomp
