#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "natal_risk/csv.hpp"
#include "natal_risk/error.hpp"
#include "natal_risk/eval.hpp"
#include "natal_risk/model_io.hpp"
#include "natal_risk/service.hpp"
#include "natal_risk/smote.hpp"
#include "natal_risk/synthetic.hpp"
#include "natal_risk/view.hpp"

namespace natal_risk::cli {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out.flush()) throw Error(ErrorCode::Io, "write failed for " + path);
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file(path, text);
  }
}

void warn(std::ostream& err, const std::string& message) { err << json{{"warning", message}}.dump() << '\n'; }

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct DataOptions {
  std::string input;
  std::string target = "apgar1_leq7";
  std::string predictors;
  std::string add_predictors;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input", o.input, "Patient CSV file")->required();
  cmd->add_option("--target", o.target, "Outcome (or factor) to predict")->capture_default_str();
  cmd->add_option("--predictors", o.predictors, "Comma-separated predictor names (default: every risk factor)");
  cmd->add_option("--add-predictors", o.add_predictors, "Extra predictors, e.g. outcomes, appended to the set");
}

DatasetView load_view(const DataOptions& o) {
  const auto& schema = builtin_schema();
  auto data = std::make_shared<const Dataset>(parse_dataset(read_file(o.input), schema));
  auto predictors = split_names(o.predictors);
  if (predictors.empty()) {
    for (auto& name : factor_names(schema)) {
      if (name != o.target) predictors.push_back(std::move(name));
    }
  }
  for (auto& name : split_names(o.add_predictors)) predictors.push_back(std::move(name));
  return feature_view(std::move(data), o.target, predictors);
}

bool single_class(const DatasetView& view) {
  std::size_t present = 0;
  for (auto c : view.class_counts()) present += c > 0 ? 1 : 0;
  return present < 2;
}

struct LearnerOptions {
  std::string learner = "tree";
  TreeParams tree;
  bool no_prune = false;
  StructureParams bn;
  std::string score = "bic";
};

void add_learner_options(CLI::App* cmd, LearnerOptions& o) {
  cmd->add_option("--learner", o.learner, "tree | bn | majority")
      ->check(CLI::IsMember({"tree", "bn", "majority"}))
      ->capture_default_str();
  cmd->add_option("--min-leaf", o.tree.min_leaf, "Minimum records per branch")->capture_default_str();
  cmd->add_flag("--no-prune", o.no_prune, "Skip pessimistic pruning");
  cmd->add_option("--confidence", o.tree.confidence, "Pruning confidence factor")->capture_default_str();
  cmd->add_option("--max-parents", o.bn.max_parents, "Parent limit per node")->capture_default_str();
  cmd->add_option("--score", o.score, "bic | bdeu")->check(CLI::IsMember({"bic", "bdeu"}))->capture_default_str();
  cmd->add_option("--ess", o.bn.equivalent_sample_size, "BDeu equivalent sample size")->capture_default_str();
  cmd->add_option("--restarts", o.bn.restarts, "Random restarts of the structure search")->capture_default_str();
  cmd->add_option("--alpha", o.bn.smoothing_alpha, "CPT smoothing pseudo-count")->capture_default_str();
}

LearnerConfig learner_config(LearnerOptions o, std::uint64_t seed) {
  if (o.learner == "tree") {
    o.tree.prune = !o.no_prune;
    o.tree.seed = seed;
    validate(o.tree);
    return o.tree;
  }
  if (o.learner == "bn") {
    o.bn.score = *parse_score_kind(o.score);
    o.bn.seed = seed;
    validate(o.bn);
    return o.bn;
  }
  return MajorityBaseline{};
}

struct SmoteOptions {
  unsigned percent = 0;
  unsigned k = 5;
  bool in_folds = false;
};

void add_smote_options(CLI::App* cmd, SmoteOptions& o) {
  cmd->add_option("--smote-percent", o.percent, "Oversampling percent (multiple of 100; 0 disables)")
      ->capture_default_str();
  cmd->add_option("--smote-k", o.k, "SMOTE neighbour count")->capture_default_str();
  cmd->add_flag("--smote-in-folds", o.in_folds, "Oversample inside each training fold instead of before folding");
}

struct Evaluation {
  DatasetView data;  // the view models are trained on (oversampled unless in-fold)
  std::optional<EvaluationReport> report;
};

/// Applies the SMOTE placement and runs k-fold cross-validation (k = 0 skips it).
Evaluation evaluate_view(const DatasetView& view, const LearnerConfig& config, const SmoteOptions& so,
                         std::size_t folds, std::uint64_t seed, std::ostream& err) {
  Evaluation ev{view, std::nullopt};
  const bool degenerate = single_class(view);
  std::optional<SmoteParams> smote_params;
  if (so.percent > 0) {
    if (degenerate) {
      warn(err, "target has a single class; SMOTE skipped");
    } else {
      smote_params = SmoteParams{so.percent, so.k, seed};
    }
  }
  if (smote_params && !so.in_folds) {
    auto augmented = std::make_shared<const Dataset>(smote(view, *smote_params));
    ev.data = feature_view(augmented, view.target_name(), view.predictor_names());
  }
  if (folds == 0) return ev;
  if (degenerate) {
    warn(err, "target has a single class; evaluation skipped");
    return ev;
  }
  const auto in_fold = (smote_params && so.in_folds) ? smote_params : std::nullopt;
  const auto cv = cross_validate(ev.data, config, folds, seed, in_fold);
  auto report = confusion_and_metrics(cv.truths, cv.predictions, cv.distributions, cv.class_labels);
  report.protocol.folds = folds;
  report.protocol.seed = seed;
  report.protocol.smote =
      !smote_params ? SmotePlacement::None : (so.in_folds ? SmotePlacement::InFolds : SmotePlacement::BeforeFolds);
  ev.report = std::move(report);
  return ev;
}

PersistedModel fit_model(const DatasetView& view, const LearnerConfig& config) {
  if (const auto* tree = std::get_if<TreeParams>(&config)) return PersistedModel{induce(view, *tree), {}, nullptr};
  if (const auto* bn = std::get_if<StructureParams>(&config))
    return PersistedModel{fit_cpts(learn_structure(view, *bn), view, bn->smoothing_alpha), {}, nullptr};
  throw Error(ErrorCode::InvalidParams, "the majority baseline cannot be persisted");
}

MetricsSummary summarize(const EvaluationReport& report) {
  MetricsSummary m;
  m.accuracy = round_half_up(report.accuracy);
  for (const auto& row : report.per_class) m.f_measure[row.label] = round_half_up(row.f_measure);
  return m;
}

std::string model_text(const PersistedModel& model) { return model_to_json(model).dump(2) + "\n"; }

PersistedModel load_model(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadModelFile, path + ": " + e.what());
  }
  return model_from_json(doc);
}

int serve(const std::string& host, int port, const std::string& model_dir, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  auto registry = model_dir.empty() ? ModelRegistry{} : ModelRegistry::load_directory(model_dir, warnings);
  for (const auto& w : warnings) warn(err, w);
  const PredictionService service(std::move(registry));

  // Block the stop signals before the server spawns workers so only the
  // waiting thread below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service);
  const int bound = server.bind(host, port);
  out << json{{"listening", {{"host", host}, {"port", bound}}}, {"models", service.registry().size()}}.dump()
      << std::endl;
  std::thread worker([&] { server.listen(); });
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  worker.join();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neonatal risk modelling: synthetic cohorts, SMOTE, decision trees, Bayesian networks"};
  app.name("natal_risk");
  app.require_subcommand(1);

  std::uint64_t seed = 1;

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic patient cohort as CSV");
  std::size_t gen_n = 1000;
  std::string gen_spec;
  std::string gen_output;
  double gen_missing = -1.0;
  bool gen_provenance = false;
  gen->add_option("--n", gen_n, "Number of records")->capture_default_str();
  gen->add_option("--spec", gen_spec, "Correlation spec JSON (default: planted cohort)");
  gen->add_option("--missing-rate", gen_missing, "Override the cohort's missing-value rate");
  gen->add_flag("--provenance", gen_provenance, "Include the provenance column");
  gen->add_option("--output", gen_output, "Output CSV (default: stdout)");
  gen->add_option("--seed", seed, "Random seed")->capture_default_str();

  // smote
  auto* sm = app.add_subcommand("smote", "Oversample the minority class of a CSV");
  DataOptions sm_data;
  SmoteParams sm_params;
  std::string sm_output;
  bool sm_provenance = false;
  add_data_options(sm, sm_data);
  sm->add_option("--percent", sm_params.percent, "Synthetic records per minority record x 100")->capture_default_str();
  sm->add_option("--k", sm_params.k, "Nearest minority neighbours")->capture_default_str();
  sm->add_option("--seed", seed, "Random seed")->capture_default_str();
  sm->add_option("--output", sm_output, "Output CSV (default: stdout)");
  sm->add_flag("--provenance", sm_provenance, "Include the provenance column");

  // train
  auto* tr = app.add_subcommand("train", "Fit a model, cross-validate it and write the model file");
  DataOptions tr_data;
  LearnerOptions tr_learner;
  SmoteOptions tr_smote;
  std::size_t tr_folds = 10;
  std::string tr_output;
  std::string tr_report;
  add_data_options(tr, tr_data);
  add_learner_options(tr, tr_learner);
  add_smote_options(tr, tr_smote);
  tr->add_option("--folds", tr_folds, "Cross-validation folds (0 skips evaluation)")->capture_default_str();
  tr->add_option("--seed", seed, "Random seed")->capture_default_str();
  tr->add_option("--output", tr_output, "Model JSON file")->required();
  tr->add_option("--report", tr_report, "Also write the text evaluation report here");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Cross-validate a learner, or score a saved model on a CSV");
  DataOptions ev_data;
  LearnerOptions ev_learner;
  SmoteOptions ev_smote;
  std::size_t ev_folds = 10;
  std::string ev_model;
  std::string ev_output;
  bool ev_json = false;
  add_data_options(ev, ev_data);
  add_learner_options(ev, ev_learner);
  add_smote_options(ev, ev_smote);
  ev->add_option("--folds", ev_folds, "Cross-validation folds")->capture_default_str();
  ev->add_option("--seed", seed, "Random seed")->capture_default_str();
  ev->add_option("--model", ev_model, "Score this saved model on --input instead of cross-validating");
  ev->add_option("--output", ev_output, "Report file (default: stdout)");
  ev->add_flag("--json", ev_json, "Emit the report as JSON");

  // export-dot
  auto* dot = app.add_subcommand("export-dot", "Render a saved model as Graphviz DOT");
  std::string dot_model;
  std::string dot_output;
  dot->add_option("--model", dot_model, "Model JSON file")->required();
  dot->add_option("--output", dot_output, "DOT file (default: stdout)");

  // serve
  auto* sv = app.add_subcommand("serve", "Serve saved models over HTTP");
  int sv_port = 8080;
  std::string sv_dir;
  std::string sv_host = "127.0.0.1";
  sv->add_option("--port", sv_port, "TCP port (0 picks a free one)")->envname("NATAL_RISK_PORT")->capture_default_str();
  sv->add_option("--model-dir", sv_dir, "Directory of model JSON files")->envname("NATAL_RISK_MODEL_DIR");
  sv->add_option("--host", sv_host, "Bind address")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", {{"code", "Usage"}, {"detail", e.what()}}}}.dump() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) {
      CorrelationSpec spec = gen_spec.empty() ? planted_cohort_spec(seed)
                                              : correlation_spec_from_json(json::parse(read_file(gen_spec)));
      spec.seed = seed;
      if (gen_missing >= 0.0) spec.missing_rate = gen_missing;
      const auto data = generate_synthetic(spec, gen_n);
      emit(gen_output, write_dataset(data, CsvWriteOptions{gen_provenance}), out);
    } else if (sm->parsed()) {
      const auto view = load_view(sm_data);
      sm_params.seed = seed;
      emit(sm_output, write_dataset(smote(view, sm_params), CsvWriteOptions{sm_provenance}), out);
    } else if (tr->parsed()) {
      const auto view = load_view(tr_data);
      const auto config = learner_config(tr_learner, seed);
      if (single_class(view)) warn(err, "target " + tr_data.target + " has a single class; the model is a single leaf");
      auto evaluation = evaluate_view(view, config, tr_smote, tr_folds, seed, err);
      PersistedModel model = fit_model(evaluation.data, config);
      if (evaluation.report) {
        model.metrics = summarize(*evaluation.report);
        model.evaluation = report_to_json(*evaluation.report);
        if (!tr_report.empty()) write_file(tr_report, render_report(*evaluation.report));
      }
      write_file(tr_output, model_text(model));
      if (evaluation.report) out << render_report(*evaluation.report);
    } else if (ev->parsed()) {
      const auto view = load_view(ev_data);
      EvaluationReport report;
      if (!ev_model.empty()) {
        const auto model = load_model(ev_model);
        if (model_target(model.artifact) != view.target_name())
          throw Error(ErrorCode::VariableMismatch, "model predicts " + model_target(model.artifact));
        std::vector<Level> truths;
        std::vector<Level> predictions;
        std::vector<std::vector<double>> dists;
        const auto& schema = view.schema();
        for (std::size_t i = 0; i < view.size(); ++i) {
          Evidence evidence;
          for (auto p : view.predictors()) {
            if (view.value(i, p) != kMissing) evidence.emplace(schema.variable(p).name, view.value(i, p));
          }
          auto result = predict(model.artifact, evidence);
          truths.push_back(view.label(i));
          predictions.push_back(result.predicted);
          dists.push_back(std::move(result.distribution));
        }
        report = confusion_and_metrics(truths, predictions, dists,
                                       schema.variable(view.target()).level_labels());
      } else {
        const auto config = learner_config(ev_learner, seed);
        auto evaluation = evaluate_view(view, config, ev_smote, ev_folds, seed, err);
        if (!evaluation.report) throw Error(ErrorCode::DegenerateTarget, "target " + ev_data.target + " has a single class");
        report = std::move(*evaluation.report);
      }
      emit(ev_output, ev_json ? report_to_json(report).dump(2) + "\n" : render_report(report), out);
    } else if (dot->parsed()) {
      emit(dot_output, export_dot(load_model(dot_model).artifact), out);
    } else if (sv->parsed()) {
      return serve(sv_host, sv_port, sv_dir, out, err);
    }
  } catch (const Error& e) {
    err << json{{"error", {{"code", to_string(e.code())}, {"detail", e.detail()}}}}.dump() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << json{{"error", {{"code", "BadRequest"}, {"detail", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace natal_risk::cli
