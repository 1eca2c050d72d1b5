#include "natal_risk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <sstream>

#include "natal_risk/error.hpp"
#include "natal_risk/random.hpp"

namespace natal_risk {

// ---------------------------------------------------------------------------
// Protocol

std::vector<std::size_t> stratified_folds(const DatasetView& view, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidParams, "need at least 2 folds");
  if (view.size() < k)
    throw Error(ErrorCode::TooFewRecords,
                std::to_string(view.size()) + " records cannot fill " + std::to_string(k) + " folds");
  std::vector<std::vector<std::size_t>> by_class(view.target_cardinality());
  for (std::size_t i = 0; i < view.size(); ++i) by_class[static_cast<std::size_t>(view.label(i))].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> folds(view.size(), 0);
  std::size_t offset = 0;
  for (auto& members : by_class) {
    shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) folds[members[i]] = (offset + i) % k;
    offset += members.size();
  }
  return folds;
}

std::string learner_name(const LearnerConfig& config) {
  struct {
    std::string operator()(const TreeParams&) const { return "decision_tree"; }
    std::string operator()(const StructureParams&) const { return "bayes_net"; }
    std::string operator()(const MajorityBaseline&) const { return "majority"; }
  } visitor;
  return std::visit(visitor, config);
}

std::string_view to_string(SmotePlacement placement) noexcept {
  switch (placement) {
    case SmotePlacement::None: return "none";
    case SmotePlacement::BeforeFolds: return "before_folds";
    case SmotePlacement::InFolds: return "in_folds";
  }
  return "";
}

std::vector<double> CrossValidationOutput::scores(Level positive) const {
  std::vector<double> out;
  out.reserve(distributions.size());
  for (const auto& d : distributions) out.push_back(d.at(static_cast<std::size_t>(positive)));
  return out;
}

namespace {

Evidence record_evidence(const DatasetView& view, std::size_t position) {
  Evidence ev;
  for (auto p : view.predictors()) {
    const Level v = view.value(position, p);
    if (v != kMissing) ev.emplace(view.schema().variable(p).name, v);
  }
  return ev;
}

/// Trained learner that can score view rows.
class FoldModel {
 public:
  FoldModel(const DatasetView& train, const LearnerConfig& config) {
    if (const auto* tree = std::get_if<TreeParams>(&config)) {
      model_ = induce(train, *tree);
    } else if (const auto* bn = std::get_if<StructureParams>(&config)) {
      model_ = fit_cpts(learn_structure(train, *bn), train, bn->smoothing_alpha);
    } else {
      const auto counts = train.class_counts();
      const double denom = static_cast<double>(train.size() + counts.size());
      std::vector<double> dist;
      for (auto c : counts) dist.push_back(static_cast<double>(c + 1) / denom);
      model_ = dist;
    }
  }

  std::vector<double> distribution(const DatasetView& view, std::size_t position) const {
    if (const auto* tree = std::get_if<DecisionTreeModel>(&model_))
      return predict_tree(*tree, record_evidence(view, position)).distribution;
    if (const auto* bn = std::get_if<BayesNetModel>(&model_))
      return predict_bn(*bn, record_evidence(view, position)).distribution;
    return std::get<std::vector<double>>(model_);
  }

 private:
  std::variant<DecisionTreeModel, BayesNetModel, std::vector<double>> model_;
};

Level argmax(const std::vector<double>& d) {
  return static_cast<Level>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace

CrossValidationOutput cross_validate(const DatasetView& view, const LearnerConfig& config, std::size_t k,
                                     std::uint64_t seed, const std::optional<SmoteParams>& in_fold_smote) {
  const auto folds = stratified_folds(view, k, seed);
  CrossValidationOutput out;
  out.class_labels = view.schema().variable(view.target()).level_labels();
  out.truths.resize(view.size());
  out.predictions.resize(view.size());
  out.distributions.resize(view.size());
  out.folds = folds;

  const auto predictor_names = view.predictor_names();
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train_pos;
    std::vector<std::size_t> test_pos;
    for (std::size_t i = 0; i < view.size(); ++i) (folds[i] == fold ? test_pos : train_pos).push_back(i);
    if (test_pos.empty()) continue;
    DatasetView train = view.subset(train_pos);
    if (in_fold_smote) {
      auto augmented = std::make_shared<const Dataset>(smote(train, *in_fold_smote));
      train = feature_view(augmented, view.target_name(), predictor_names);
    }
    const FoldModel model(train, config);
    for (auto i : test_pos) {
      out.truths[i] = view.label(i);
      out.distributions[i] = model.distribution(view, i);
      out.predictions[i] = argmax(out.distributions[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::correct() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t cls) const {
  return std::accumulate(counts.at(cls).begin(), counts.at(cls).end(), std::size_t{0});
}

double matthews(double tp, double fp, double fn, double tn) {
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// (score, is_positive) sorted by descending score.
std::vector<std::pair<double, bool>> ranked(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  std::vector<std::pair<double, bool>> items;
  items.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) items.emplace_back(scores[i], positive[i]);
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  return items;
}

}  // namespace

std::optional<double> roc_area_trapezoid(std::span<const double> scores, std::span<const bool> positive) {
  const auto items = ranked(scores, positive);
  const double p = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n = static_cast<double>(positive.size()) - p;
  if (p == 0.0 || n == 0.0) return std::nullopt;
  double tp = 0.0;
  double fp = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    const double tp_before = tp;
    const double fp_before = fp;
    std::size_t j = i;
    for (; j < items.size() && items[j].first == items[i].first; ++j) (items[j].second ? tp : fp) += 1.0;
    area += (fp - fp_before) * (tp + tp_before) / 2.0;
    i = j;
  }
  return area / (p * n);
}

std::optional<double> roc_area_mann_whitney(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  double u = 0.0;
  double p = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) (positive[i] ? p : n) += 1.0;
  if (p == 0.0 || n == 0.0) return std::nullopt;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      if (scores[i] > scores[j]) {
        u += 1.0;
      } else if (scores[i] == scores[j]) {
        u += 0.5;
      }
    }
  }
  return u / (p * n);
}

std::optional<double> prc_area(std::span<const double> scores, std::span<const bool> positive) {
  const auto items = ranked(scores, positive);
  const double p = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (p == 0.0) return std::nullopt;
  std::vector<double> recall;
  std::vector<double> precision;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    for (; j < items.size() && items[j].first == items[i].first; ++j) (items[j].second ? tp : fp) += 1.0;
    recall.push_back(tp / p);
    precision.push_back(tp / (tp + fp));
    i = j;
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double area = 0.0;
  double last_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    area += (recall[i] - last_recall) * precision[i];
    last_recall = recall[i];
  }
  return area;
}

EvaluationReport metrics_from_matrix(const ConfusionMatrix& matrix) {
  const std::size_t c = matrix.classes.size();
  if (matrix.counts.size() != c) throw Error(ErrorCode::LengthMismatch, "matrix rows do not match classes");
  for (const auto& row : matrix.counts) {
    if (row.size() != c) throw Error(ErrorCode::LengthMismatch, "matrix is not square");
  }
  EvaluationReport report;
  report.matrix = matrix;
  const double total = static_cast<double>(matrix.total());
  if (total == 0.0) throw Error(ErrorCode::EmptyInput, "confusion matrix is empty");
  for (std::size_t k = 0; k < c; ++k) {
    double predicted_k = 0.0;
    for (std::size_t t = 0; t < c; ++t) predicted_k += static_cast<double>(matrix.counts[t][k]);
    const double tp = static_cast<double>(matrix.counts[k][k]);
    const double support = static_cast<double>(matrix.support(k));
    const double fn = support - tp;
    const double fp = predicted_k - tp;
    const double tn = total - tp - fn - fp;
    MetricsRow row;
    row.label = matrix.classes[k];
    row.tp_rate = ratio(tp, tp + fn);
    row.fp_rate = ratio(fp, fp + tn);
    row.precision = ratio(tp, tp + fp);
    row.recall = row.tp_rate;
    row.f_measure = ratio(2.0 * row.precision * row.recall, row.precision + row.recall);
    row.mcc = matthews(tp, fp, fn, tn);
    row.support = matrix.support(k);
    report.per_class.push_back(row);
  }
  auto weighted = [&](auto field) {
    double s = 0.0;
    for (const auto& row : report.per_class) s += static_cast<double>(row.support) * field(row);
    return s / total;
  };
  report.weighted.tp_rate = weighted([](const MetricsRow& r) { return r.tp_rate; });
  report.weighted.fp_rate = weighted([](const MetricsRow& r) { return r.fp_rate; });
  report.weighted.precision = weighted([](const MetricsRow& r) { return r.precision; });
  report.weighted.recall = weighted([](const MetricsRow& r) { return r.recall; });
  report.weighted.f_measure = weighted([](const MetricsRow& r) { return r.f_measure; });
  report.weighted.mcc = weighted([](const MetricsRow& r) { return r.mcc; });
  report.weighted.support = matrix.total();
  report.accuracy = static_cast<double>(matrix.correct()) / total;
  return report;
}

EvaluationReport confusion_and_metrics(std::span<const Level> truths, std::span<const Level> predictions,
                                       std::span<const std::vector<double>> distributions,
                                       const std::vector<std::string>& classes) {
  if (truths.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to evaluate");
  if (truths.size() != predictions.size() || (!distributions.empty() && distributions.size() != truths.size()))
    throw Error(ErrorCode::LengthMismatch, "truths, predictions and scores differ in length");
  const std::size_t c = classes.size();
  ConfusionMatrix matrix{classes, std::vector<std::vector<std::size_t>>(c, std::vector<std::size_t>(c, 0))};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] < 0 || predictions[i] < 0 || static_cast<std::size_t>(truths[i]) >= c ||
        static_cast<std::size_t>(predictions[i]) >= c)
      throw Error(ErrorCode::BadValue, "class level out of range at record " + std::to_string(i));
    ++matrix.counts[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(predictions[i])];
  }
  EvaluationReport report = metrics_from_matrix(matrix);
  if (distributions.empty()) return report;

  bool all_roc = true;
  bool all_prc = true;
  double roc_sum = 0.0;
  double prc_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> scores;
    scores.reserve(truths.size());
    for (std::size_t i = 0; i < truths.size(); ++i) {
      if (distributions[i].size() != c) throw Error(ErrorCode::LengthMismatch, "distribution width != class count");
      scores.push_back(distributions[i][k]);
    }
    std::unique_ptr<bool[]> positive(new bool[truths.size()]);
    for (std::size_t i = 0; i < truths.size(); ++i) positive[i] = static_cast<std::size_t>(truths[i]) == k;
    std::span<const bool> pos(positive.get(), truths.size());
    auto& row = report.per_class[k];
    row.roc_area = roc_area_trapezoid(scores, pos);
    row.prc_area = prc_area(scores, pos);
    const double w = static_cast<double>(row.support);
    if (row.roc_area) {
      roc_sum += w * *row.roc_area;
    } else if (row.support > 0) {
      all_roc = false;
    }
    if (row.prc_area) {
      prc_sum += w * *row.prc_area;
    } else if (row.support > 0) {
      all_prc = false;
    }
  }
  const double total = static_cast<double>(truths.size());
  if (all_roc) report.weighted.roc_area = roc_sum / total;
  if (all_prc) report.weighted.prc_area = prc_sum / total;
  return report;
}

EvaluationReport confusion_and_metrics(std::span<const Level> truths, std::span<const Level> predictions,
                                       std::span<const double> scores, const std::vector<std::string>& classes,
                                       Level positive) {
  if (classes.size() != 2) throw Error(ErrorCode::InvalidParams, "score form needs exactly two classes");
  if (scores.size() != truths.size()) throw Error(ErrorCode::LengthMismatch, "scores and truths differ in length");
  std::vector<std::vector<double>> dists;
  dists.reserve(scores.size());
  for (double s : scores) {
    std::vector<double> d(2);
    d[static_cast<std::size_t>(positive)] = s;
    d[static_cast<std::size_t>(1 - positive)] = 1.0 - s;
    dists.push_back(std::move(d));
  }
  return confusion_and_metrics(truths, predictions, dists, classes);
}

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", round_half_up(v, 3));
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string fixed3(const std::optional<double>& v) { return v ? fixed3(*v) : "?"; }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string column_letter(std::size_t i) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i-- > 0);
  return s;
}

const std::vector<std::pair<std::string, std::size_t>> kColumns = {
    {"TP Rate", 9}, {"FP Rate", 9},  {"Precision", 11}, {"Recall", 9},  {"F-Measure", 11},
    {"MCC", 9},     {"ROC Area", 10}, {"PRC Area", 10},  {"Class", 0},
};

std::string metrics_line(const std::string& lead, const MetricsRow& r, const std::string& cls) {
  const std::vector<std::string> cells = {fixed3(r.tp_rate),  fixed3(r.fp_rate), fixed3(r.precision),
                                          fixed3(r.recall),   fixed3(r.f_measure), fixed3(r.mcc),
                                          fixed3(r.roc_area), fixed3(r.prc_area)};
  std::string line = pad(lead, 17);
  for (std::size_t i = 0; i < cells.size(); ++i) line += pad(cells[i], kColumns[i].second);
  line += cls;
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line;
}

}  // namespace

std::string render_report(const EvaluationReport& report) {
  std::ostringstream out;
  out << "=== Detailed Accuracy By Class ===\n\n";
  std::string header = pad("", 17);
  for (const auto& [name, width] : kColumns) header += width ? pad(name, width) : name;
  out << header << "\n";
  for (const auto& row : report.per_class) out << metrics_line("", row, row.label) << "\n";
  out << metrics_line("Weighted Avg.", report.weighted, "") << "\n\n";
  out << "Accuracy: " << fixed3(report.accuracy) << " (" << report.matrix.correct() << "/" << report.matrix.total()
      << ")\n\n";

  out << "=== Confusion Matrix ===\n\n";
  std::size_t width = 3;
  for (const auto& row : report.matrix.counts) {
    for (auto v : row) width = std::max(width, std::to_string(v).size());
  }
  for (std::size_t i = 0; i < report.matrix.classes.size(); ++i)
    width = std::max(width, column_letter(i).size());
  ++width;
  std::string legend;
  for (std::size_t i = 0; i < report.matrix.classes.size(); ++i) legend += lpad(column_letter(i), width);
  out << legend << "   <-- classified as\n";
  for (std::size_t t = 0; t < report.matrix.classes.size(); ++t) {
    std::string line;
    for (auto v : report.matrix.counts[t]) line += lpad(std::to_string(v), width);
    out << line << " | " << lpad(column_letter(t), 3) << " = " << report.matrix.classes[t] << "\n";
  }
  return out.str();
}

nlohmann::json report_to_json(const EvaluationReport& report) {
  auto row_json = [](const MetricsRow& r) {
    nlohmann::json j = {
        {"tp_rate", r.tp_rate}, {"fp_rate", r.fp_rate}, {"precision", r.precision}, {"recall", r.recall},
        {"f_measure", r.f_measure}, {"mcc", r.mcc}, {"support", r.support},
    };
    j["roc_area"] = r.roc_area ? nlohmann::json(*r.roc_area) : nlohmann::json(nullptr);
    j["prc_area"] = r.prc_area ? nlohmann::json(*r.prc_area) : nlohmann::json(nullptr);
    if (!r.label.empty()) j["class"] = r.label;
    return j;
  };
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& r : report.per_class) per_class.push_back(row_json(r));
  return {
      {"accuracy", report.accuracy},
      {"confusion_matrix", {{"classes", report.matrix.classes}, {"counts", report.matrix.counts}}},
      {"per_class", per_class},
      {"weighted", row_json(report.weighted)},
      {"protocol",
       {{"folds", report.protocol.folds},
        {"seed", report.protocol.seed},
        {"smote", to_string(report.protocol.smote)}}},
  };
}

}  // namespace natal_risk
