#include "robcomp/cli.hpp"

#include <CLI11.hpp>

#include <ostream>
#include <sstream>

#include "robcomp/reports.hpp"

namespace robcomp {

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--out", c.out, "Report path (stdout when absent)");
  sub->add_option("--format", c.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
  } else {
    write_file(c.out, text);
  }
}

void emit_report(const Common& c, const Json& report, std::ostream& out) {
  emit(c, c.format == "csv" ? json_to_csv(report) : dump_json(report), out);
}

Json envelope(std::string_view command, const Common& c, const Json& config, Json result) {
  Json j;
  j["command"] = command;
  j["seed"] = c.seed;
  j["config_digest"] = config_digest(config);
  j["config"] = config;
  j["result"] = std::move(result);
  return j;
}

KConfig make_kconfig(std::size_t k, double fraction, bool permissive) {
  KConfig cfg;
  if (k > 0) cfg.shared = k;
  cfg.default_fraction = fraction;
  cfg.square = permissive ? SquarePolicy::Permissive : SquarePolicy::Strict;
  return cfg;
}

RegularizerSpec parse_regularizer(const std::string& text, double top_fraction) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::BadSpec, "regularizer '" + text + "' must look like kind:strength");
  }
  RegularizerSpec spec;
  spec.kind = regularizer_kind_from_string(text.substr(0, colon));
  try {
    spec.strength = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadSpec, "bad strength in '" + text + "'");
  }
  spec.top_fraction = top_fraction;
  return spec;
}

struct AttackOptions {
  std::string norm = "inf";
  double delta = 0.1;
  std::size_t steps = 40;
  double step_size = 0.0;
  std::size_t restarts = 5;
  std::vector<double> clip;

  void add(CLI::App* sub, const std::string& prefix) {
    sub->add_option("--" + prefix + "norm", norm, "Attack norm")
        ->check(CLI::IsMember({"inf", "two"}))
        ->capture_default_str();
    sub->add_option("--" + prefix + "delta", delta, "Attack budget")->capture_default_str();
    sub->add_option("--" + prefix + "steps", steps, "PGD steps")->capture_default_str();
    sub->add_option("--" + prefix + "step-size", step_size, "PGD step (0: 2.5 delta / steps)");
    sub->add_option("--" + prefix + "restarts", restarts, "Random restarts")->capture_default_str();
    sub->add_option("--" + prefix + "clip", clip, "Input box lo hi")->expected(2);
  }

  AttackConfig build(std::uint64_t seed) const {
    AttackConfig cfg;
    cfg.norm = norm_kind_from_string(norm);
    cfg.delta = delta;
    cfg.steps = steps;
    if (step_size > 0.0) cfg.step_size = step_size;
    cfg.restarts = restarts;
    cfg.seed = seed;
    if (clip.size() == 2) cfg.clip_box = std::make_pair(clip[0], clip[1]);
    cfg.validate();
    return cfg;
  }
};

struct GenDataOptions {
  std::string source = "gaussian_blobs";
  std::size_t samples = 1000;
  std::size_t dim = 2;
  int classes = 2;
  int centers_per_class = 1;
  double separation = 4.0;
  double noise = 1.0;
  std::string images;
  std::string labels;
  bool binarize = false;
  std::size_t limit = 0;
};

int gen_data(const GenDataOptions& o, const Common& c, std::ostream& out) {
  DatasetSpec spec;
  if (o.source == "gaussian_blobs") {
    spec.source = DatasetSource::GaussianBlobs;
  } else if (o.source == "two_moons") {
    spec.source = DatasetSource::TwoMoons;
  } else {
    spec.source = DatasetSource::MnistIdx;
  }
  spec.samples = o.samples;
  spec.dim = o.dim;
  spec.classes = o.classes;
  spec.centers_per_class = o.centers_per_class;
  spec.separation = o.separation;
  spec.noise = o.noise;
  spec.seed = c.seed;
  spec.images_path = o.images;
  spec.labels_path = o.labels;
  if (o.binarize) spec.label_map = binarized_digit_map();
  if (o.limit > 0) spec.limit = o.limit;
  const Dataset d = load_dataset(spec);
  emit(c, c.format == "csv" ? dataset_to_csv(d) : dump_json(dataset_to_json(d)), out);
  return kExitOk;
}

struct TrainOptions {
  std::string data;
  std::string model_out;
  std::string history;
  std::size_t width = 64;
  std::size_t depth = 1;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double wd = 0.01;
  std::size_t patience = 10;
  double val_fraction = 0.05;
  std::vector<std::string> regs;
  double top_fraction = 0.05;
  std::string frobenius = "none";
  double adv_ratio = 0.5;
  bool adversarial = false;
  AttackOptions attack;
};

int train_cmd(const TrainOptions& o, const Common& c, std::ostream& out) {
  const Dataset data = load_dataset_file(o.data);
  const std::size_t outputs = data.num_classes <= 2 ? 1 : static_cast<std::size_t>(data.num_classes);
  Network net = init_network(data.dim(), o.width, o.depth, outputs, c.seed);

  TrainConfig cfg;
  cfg.optimizer.learning_rate = o.lr;
  cfg.optimizer.weight_decay = o.wd;
  cfg.batch_size = o.batch_size;
  cfg.max_epochs = o.epochs;
  cfg.seed = c.seed;
  cfg.patience = o.patience;
  cfg.validation_fraction = o.val_fraction;
  for (const auto& r : o.regs) cfg.regularizers.push_back(parse_regularizer(r, o.top_fraction));
  if (o.frobenius == "init") cfg.frobenius_targets = frobenius_targets_of(net);
  if (o.adversarial) cfg.adversarial = AdversarialTraining{o.attack.build(c.seed), o.adv_ratio};

  Json config;
  config["data"] = o.data;
  config["width"] = o.width;
  config["depth"] = o.depth;
  config["epochs"] = o.epochs;
  config["batch_size"] = o.batch_size;
  config["lr"] = o.lr;
  config["wd"] = o.wd;
  config["patience"] = o.patience;
  config["val_fraction"] = o.val_fraction;
  config["regularizers"] = o.regs;
  config["top_fraction"] = o.top_fraction;
  config["frobenius"] = o.frobenius;
  config["adversarial"] = o.adversarial ? Json(to_json(cfg.adversarial->attack)) : Json(nullptr);
  config["adv_ratio"] = o.adv_ratio;

  const TrainResult res = train(net, data, cfg);
  ModelMetadata meta{c.seed, config_digest(config), utc_timestamp()};
  save_model(o.model_out, res.net, meta);
  if (!o.history.empty()) {
    std::ostringstream csv;
    write_history_csv(csv, res.history);
    write_file(o.history, csv.str());
  }
  Json result;
  result["model"] = o.model_out;
  result["epochs_run"] = res.history.size();
  result["best_epoch"] = res.best_epoch;
  result["stopped_early"] = res.stopped_early;
  result["train_accuracy"] = accuracy(res.net, data);
  result["history"] = to_json(res.history);
  emit_report(c, envelope("train", c, config, std::move(result)), out);
  return kExitOk;
}

struct ModelOptions {
  std::string model;
  std::size_t k = 0;
  double k_fraction = 0.1;
  bool permissive = false;

  void add(CLI::App* sub) {
    sub->add_option("--model", model, "nnwb-v1 model file")->required();
    sub->add_option("--k", k, "Shared truncation k (0: ceil(fraction * h))");
    sub->add_option("--k-fraction", k_fraction, "Default k as a fraction of h")->capture_default_str();
    sub->add_flag("--permissive", permissive, "Allow non-square layers with h = max(rows, cols)");
  }

  Json config() const {
    return {{"model", model}, {"k", k}, {"k_fraction", k_fraction}, {"permissive", permissive}};
  }
};

int audit_cmd(const ModelOptions& o, const Common& c, std::ostream& out) {
  const Network net = load_model(o.model);
  const Json result = audit_to_json(net, make_kconfig(o.k, o.k_fraction, o.permissive));
  emit_report(c, envelope("audit", c, o.config(), result), out);
  return kExitOk;
}

struct BoundOptions {
  ModelOptions model;
  std::string norm = "inf";
  std::size_t exact_threshold = 14;
  std::size_t restarts = 16;
  std::string data;
  double delta = 0.0;
};

int bound_cmd(const BoundOptions& o, const Common& c, std::ostream& out) {
  const Network net = load_model(o.model.model);
  SearchConfig scfg;
  scfg.exact_threshold = o.exact_threshold;
  scfg.restarts = o.restarts;
  scfg.seed = c.seed;
  BoundReport report = lipschitz_bound(net, norm_kind_from_string(o.norm),
                                       make_kconfig(o.model.k, o.model.k_fraction, o.model.permissive), scfg);
  if (!o.data.empty()) attach_risk_bound(report, net, load_dataset_file(o.data), o.delta);
  Json config = o.model.config();
  config["norm"] = o.norm;
  config["exact_threshold"] = o.exact_threshold;
  config["restarts"] = o.restarts;
  config["data"] = o.data;
  config["delta"] = o.delta;
  emit_report(c, envelope("bound", c, config, to_json(report)), out);
  return kExitOk;
}

struct AttackCmdOptions {
  std::string model;
  std::string data;
  AttackOptions attack;
  std::size_t uae_epochs = 0;
  std::size_t uae_batch = 64;
  std::size_t sv_k = 0;
  bool per_example = false;
};

int attack_cmd(const AttackCmdOptions& o, const Common& c, std::ostream& out) {
  const Network net = load_model(o.model);
  const Dataset data = load_dataset_file(o.data);
  const AttackConfig cfg = o.attack.build(c.seed);
  Json result;
  result["attack"] = to_json(cfg);
  result["outcome"] = to_json(evaluate_robustness(net, data, cfg, o.sv_k), o.per_example);
  if (o.uae_epochs > 0) result["uae"] = to_json(uae_fgsm(net, data, cfg, o.uae_epochs, o.uae_batch));
  Json config = {{"model", o.model}, {"data", o.data}, {"attack", to_json(cfg)},
                 {"uae_epochs", o.uae_epochs}, {"uae_batch", o.uae_batch}, {"sv_k", o.sv_k}};
  emit_report(c, envelope("attack", c, config, std::move(result)), out);
  return kExitOk;
}

struct PruneOptions {
  std::string model;
  std::string kind = "row";
  std::string method = "global";
  std::vector<double> ratios{0.3};
  std::string data;
  bool attack = false;
  AttackOptions attack_opts;
  std::string model_out;
};

int prune_cmd(const PruneOptions& o, const Common& c, std::ostream& out) {
  const Network net = load_model(o.model);
  const PruneKind kind = prune_kind_from_string(o.kind);
  if (o.method != "global" && o.method != "layerwise") {
    throw Error(ErrorKind::BadSpec, "unknown pruning method '" + o.method + "'");
  }
  const PruneMethod method = o.method == "global" ? PruneMethod::Global : PruneMethod::Layerwise;
  Json plans = Json::array();
  for (double r : o.ratios) {
    const PruneResult pr = method == PruneMethod::Global ? eps_targeted_global_prune(net, kind, r)
                                                         : layerwise_prune(net, kind, r);
    plans.push_back(to_json(pr.plan));
    if (!o.model_out.empty() && r == o.ratios.front()) {
      save_model(o.model_out, pr.net, ModelMetadata{c.seed, config_digest(to_json(pr.plan)), utc_timestamp()});
    }
  }
  Json result;
  result["method"] = to_string(method);
  result["plans"] = std::move(plans);
  std::optional<AttackConfig> attack;
  if (o.attack) attack = o.attack_opts.build(c.seed);
  if (!o.data.empty()) {
    result["retention"] = to_json(retention_curve(net, load_dataset_file(o.data), kind, method, o.ratios, attack));
  }
  Json config = {{"model", o.model}, {"kind", o.kind}, {"method", o.method}, {"ratios", o.ratios},
                 {"data", o.data}, {"attack", attack ? to_json(*attack) : Json(nullptr)}};
  emit_report(c, envelope("prune", c, config, std::move(result)), out);
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::IoError || kind == ErrorKind::FormatError ? kExitIo : kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compressibility, Lipschitz bounds and adversarial robustness of ReLU networks",
               "robcomp"};
  app.require_subcommand(1);
  Common common;

  GenDataOptions gd;
  auto* gen = app.add_subcommand("gen-data", "Generate or convert a dataset");
  add_common(gen, common);
  gen->add_option("--source", gd.source)
      ->check(CLI::IsMember({"gaussian_blobs", "two_moons", "mnist_idx"}))
      ->capture_default_str();
  gen->add_option("--samples", gd.samples)->capture_default_str();
  gen->add_option("--dim", gd.dim)->capture_default_str();
  gen->add_option("--classes", gd.classes)->capture_default_str();
  gen->add_option("--centers-per-class", gd.centers_per_class)->capture_default_str();
  gen->add_option("--separation", gd.separation)->capture_default_str();
  gen->add_option("--noise", gd.noise)->capture_default_str();
  gen->add_option("--images", gd.images, "IDX image file");
  gen->add_option("--labels", gd.labels, "IDX label file");
  gen->add_flag("--binarize", gd.binarize, "Map digits 0-4 to 0 and 5-9 to 1");
  gen->add_option("--limit", gd.limit, "Keep the first N examples");

  TrainOptions tr;
  auto* trn = app.add_subcommand("train", "Train a network and save it");
  add_common(trn, common);
  trn->set_config("--config", "", "TOML config file with the same keys as the flags");
  trn->add_option("--data", tr.data, "Dataset file from gen-data")->required();
  trn->add_option("--model-out", tr.model_out, "Where to save the model")->required();
  trn->add_option("--history", tr.history, "Per-epoch CSV");
  trn->add_option("--width", tr.width)->capture_default_str();
  trn->add_option("--depth", tr.depth)->capture_default_str();
  trn->add_option("--epochs", tr.epochs)->capture_default_str();
  trn->add_option("--batch-size", tr.batch_size)->capture_default_str();
  trn->add_option("--lr", tr.lr)->capture_default_str();
  trn->add_option("--wd", tr.wd)->capture_default_str();
  trn->add_option("--patience", tr.patience)->capture_default_str();
  trn->add_option("--val-fraction", tr.val_fraction)->capture_default_str();
  trn->add_option("--reg", tr.regs, "kind:strength, kind in group_lasso ratio_lasso nuclear spread_variance l1");
  trn->add_option("--top-fraction", tr.top_fraction)->capture_default_str();
  trn->add_option("--frobenius", tr.frobenius, "Project hidden layers to their initial norm")
      ->check(CLI::IsMember({"none", "init"}))
      ->capture_default_str();
  trn->add_flag("--adversarial", tr.adversarial, "PGD adversarial training");
  trn->add_option("--adv-ratio", tr.adv_ratio)->capture_default_str();
  tr.attack.add(trn, "adv-");

  ModelOptions au;
  auto* aud = app.add_subcommand("audit", "Compressibility profiles and per-layer bounds");
  add_common(aud, common);
  au.add(aud);

  BoundOptions bo;
  auto* bnd = app.add_subcommand("bound", "Lipschitz and adversarial risk bounds");
  add_common(bnd, common);
  bo.model.add(bnd);
  bnd->add_option("--norm", bo.norm)->check(CLI::IsMember({"inf", "two"}))->capture_default_str();
  bnd->add_option("--exact-threshold", bo.exact_threshold)->capture_default_str();
  bnd->add_option("--restarts", bo.restarts)->capture_default_str();
  bnd->add_option("--data", bo.data, "Dataset for the risk bound");
  bnd->add_option("--delta", bo.delta, "Attack budget for the risk bound")->capture_default_str();

  AttackCmdOptions at;
  auto* atk = app.add_subcommand("attack", "PGD evaluation, diagnostics and UAE");
  add_common(atk, common);
  atk->add_option("--model", at.model)->required();
  atk->add_option("--data", at.data)->required();
  at.attack.add(atk, "");
  atk->add_option("--uae-epochs", at.uae_epochs, "Universal perturbation epochs (0: off)");
  atk->add_option("--uae-batch", at.uae_batch)->capture_default_str();
  atk->add_option("--sv-k", at.sv_k, "Singular directions counted as dominant (0: ceil(0.1 d))");
  atk->add_flag("--per-example", at.per_example);

  PruneOptions pr;
  auto* prn = app.add_subcommand("prune", "Pruning plans and retention curves");
  add_common(prn, common);
  prn->add_option("--model", pr.model)->required();
  prn->add_option("--kind", pr.kind)->check(CLI::IsMember({"row", "spectral"}))->capture_default_str();
  prn->add_option("--method", pr.method)->check(CLI::IsMember({"global", "layerwise"}))->capture_default_str();
  prn->add_option("--ratio", pr.ratios, "Retained ratios")->capture_default_str();
  prn->add_option("--data", pr.data, "Dataset for the retention curve");
  prn->add_flag("--attack", pr.attack, "Also report robust accuracy");
  pr.attack_opts.add(prn, "attack-");
  prn->add_option("--model-out", pr.model_out, "Save the model pruned at the first ratio");

  std::string command = "robcomp";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    out << dump_json(Json{{"command", command}, {"error", {{"kind", "BadSpec"}, {"message", e.what()}}}});
    return kExitValidation;
  }

  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  try {
    if (command == "gen-data") return gen_data(gd, common, out);
    if (command == "train") return train_cmd(tr, common, out);
    if (command == "audit") return audit_cmd(au, common, out);
    if (command == "bound") return bound_cmd(bo, common, out);
    if (command == "attack") return attack_cmd(at, common, out);
    if (command == "prune") return prune_cmd(pr, common, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    const Json report{{"command", command},
                      {"seed", common.seed},
                      {"error", {{"kind", to_string(e.kind())}, {"message", e.detail()}}}};
    try {
      emit_report(common, report, out);
    } catch (const Error&) {
      out << dump_json(report);
    }
    return exit_code_for(e.kind());
  }
  return kExitValidation;
}

}  // namespace robcomp
