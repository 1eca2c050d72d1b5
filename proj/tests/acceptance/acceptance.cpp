// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "natal_risk/bayesnet.hpp"
#include "natal_risk/dtree.hpp"
#include "natal_risk/eval.hpp"
#include "natal_risk/service.hpp"
#include "natal_risk/smote.hpp"
#include "natal_risk/synthetic.hpp"

using namespace natal_risk;
using nlohmann::json;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.ok && secs >= budget_seconds) {
    out.ok = false;
    out.detail = "over the time budget";
  }
  if (!out.ok) ++failures;
  std::printf("%s %-28s %8.3fs / %.0fs  %s\n", out.ok ? "PASS" : "FAIL", name.c_str(), secs, budget_seconds,
              out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool near(double got, double want, double tol) { return std::abs(got - want) <= tol; }

std::vector<std::string> planted_predictors() {
  auto p = factor_names(builtin_schema());
  p.push_back("ventilated_at_birth");
  return p;
}

// ---------------------------------------------------------------------------

Outcome reference_matrix() {
  Outcome o;
  // Class 0 is the low-score class; rows are truth, columns prediction.
  const std::size_t counts[2][2] = {{48, 6}, {2, 230}};
  std::vector<Level> truth;
  std::vector<Level> pred;
  for (Level t = 0; t < 2; ++t)
    for (Level p = 0; p < 2; ++p)
      for (std::size_t i = 0; i < counts[t][p]; ++i) {
        truth.push_back(t);
        pred.push_back(p);
      }
  std::vector<std::vector<double>> dist;
  for (auto p : pred) dist.push_back(p == 0 ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0});
  const auto r = confusion_and_metrics(truth, pred, dist, {"0", "1"});
  const auto check = [&](const char* cell, double got, double want) {
    const double g = round_half_up(got);
    o.require(near(g, want, 0.005 + 1e-12), std::string(cell) + " = " + fmt(g) + ", expected " + fmt(want));
  };
  check("accuracy", r.accuracy, 0.972);
  check("class 0 precision", r.per_class[0].precision, 0.96);
  check("class 0 recall", r.per_class[0].recall, 0.889);
  check("class 0 F", r.per_class[0].f_measure, 0.923);
  check("class 0 MCC", r.per_class[0].mcc, 0.91);
  check("class 1 MCC", r.per_class[1].mcc, 0.91);
  check("class 1 tp rate", r.per_class[1].tp_rate, 0.991);
  check("class 1 recall", r.per_class[1].recall, 0.991);
  check("class 1 F", r.per_class[1].f_measure, 0.983);
  check("weighted precision", r.weighted.precision, 0.97);
  check("weighted recall", r.weighted.recall, 0.97);
  check("weighted F", r.weighted.f_measure, 0.97);
  if (o.ok) o.detail = "accuracy " + fmt(round_half_up(r.accuracy)) + ", MCC " + fmt(round_half_up(r.per_class[0].mcc));
  return o;
}

Outcome smote_count_law() {
  Outcome o;
  const std::vector<std::string> features = {"age_gt35", "twins", "birth_weight", "iugr", "hypertension"};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t majority = 20 + rng() % 200;
    std::vector<PatientRecord> records;
    for (std::size_t i = 0; i < 18 + majority; ++i) {
      auto r = fixture::record({{"apgar1_leq7", i < 18 ? kPresent : kAbsent}});
      for (const auto& f : features) {
        const auto idx = builtin_schema().index_of(f);
        r.values[idx] = static_cast<Level>(rng() % builtin_schema().variable(idx).cardinality());
      }
      records.push_back(std::move(r));
    }
    std::shuffle(records.begin(), records.end(), rng);
    const auto view = feature_view(fixture::dataset(records), "apgar1_leq7", features);
    const auto out = smote(view, {200, 5, seed});
    const auto target = builtin_schema().index_of("apgar1_leq7");
    std::size_t minority = 0;
    std::size_t majority_out = 0;
    for (std::size_t i = 0; i < out.size(); ++i) (out[i].values[target] == kPresent ? minority : majority_out)++;
    o.require(minority == 54, "seed " + std::to_string(seed) + ": " + std::to_string(minority) + " minority records");
    o.require(majority_out == majority, "seed " + std::to_string(seed) + ": majority count changed");
  }
  if (o.ok) o.detail = "18 -> 54 on 100 seeds";
  return o;
}

Outcome inference_oracle() {
  Outcome o;
  std::mt19937_64 rng(99);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 11;
    auto [model, net] = fixture::random_network(rng, n, 3);
    const std::size_t q = rng() % n;
    Evidence ev;
    std::map<std::size_t, int> oev;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == q || rng() % 3 != 0) continue;
      const int val = static_cast<int>(rng() % 2);
      ev[model.variables[v].name] = static_cast<Level>(val);
      oev[v] = val;
    }
    const auto got = eliminate(model, model.variables[q].name, ev);
    const auto want = oracle::enumerate(net, q, oev);
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(got.at(i) - want[i]));
  }
  o.require(worst <= 1e-9, "max deviation " + std::to_string(worst));
  if (o.ok) {
    std::ostringstream ss;
    ss << "max deviation " << worst;
    o.detail = ss.str();
  }
  return o;
}

Outcome tree_oracle() {
  Outcome o;
  std::mt19937_64 rng(500);
  TreeParams params;
  params.prune = false;
  std::size_t splits = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t features = 1 + rng() % 4;
    const std::size_t n = 1 + rng() % 20;
    std::vector<oracle::Row> rows(n);
    for (auto& r : rows) {
      for (std::size_t f = 0; f < features; ++f) r.x.push_back(static_cast<int>(rng() % 2));
      r.y = static_cast<int>(rng() % 2);
    }
    const auto model = induce(fixture::view_from_rows(rows, features), params);
    const auto expected = oracle::best_root(rows, features, params.min_leaf);
    if (!expected) {
      o.require(model.root().is_leaf(), "trial " + std::to_string(t) + ": split where none is justified");
    } else {
      ++splits;
      o.require(!model.root().is_leaf() && static_cast<std::size_t>(model.root().feature) == *expected,
                "trial " + std::to_string(t) + ": wrong root");
    }
  }
  const std::size_t c[2] = {9, 5};
  const double h = entropy(c);
  o.require(near(h, 0.940286, 1e-6), "entropy {9,5} = " + fmt(h));
  if (o.ok) o.detail = std::to_string(splits) + " split roots agree; entropy {9,5} = " + fmt(h);
  return o;
}

Outcome planted_recovery() {
  Outcome o;
  auto ds = std::make_shared<const Dataset>(generate_synthetic(planted_cohort_spec(2025), 5000));
  const auto view = feature_view(ds, "apgar1_leq7", planted_predictors());

  const auto tree = induce(view, {});
  const bool root_ok = !tree.root().is_leaf() &&
                       tree.features.at(static_cast<std::size_t>(tree.root().feature)).name ==
                           "ventilated_at_birth";
  o.require(root_ok, "tree root is not ventilated_at_birth");

  const auto cv = cross_validate(view, TreeParams{}, 10, 1);
  const auto report = confusion_and_metrics(cv.truths, cv.predictions, cv.distributions, cv.class_labels);
  o.require(report.accuracy >= 0.95, "10-fold accuracy " + fmt(report.accuracy));

  const auto bn = fit_cpts(learn_structure(view, {}), view, 1.0);
  const auto twins = *bn.find("twins");
  const auto eg = *bn.find("eg_lt37");
  const bool edge = bn.dag.has_edge(twins, eg) || bn.dag.has_edge(eg, twins);
  o.require(edge, "no twins - eg_lt37 edge");
  if (o.ok) o.detail = "root ventilated_at_birth, CV accuracy " + fmt(report.accuracy) + ", twins - eg_lt37 edge";
  return o;
}

Outcome roc_correctness() {
  Outcome o;
  const auto area = [](std::vector<double> s, std::vector<int> y, bool trapezoid) {
    std::unique_ptr<bool[]> b(new bool[y.size()]);
    for (std::size_t i = 0; i < y.size(); ++i) b[i] = y[i] != 0;
    const std::span<const bool> pos(b.get(), y.size());
    return trapezoid ? roc_area_trapezoid(s, pos) : roc_area_mann_whitney(s, pos);
  };
  o.require(area({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}, true) == 1.0, "perfect ranking is not 1.0");
  o.require(area({0.9, 0.8, 0.3, 0.1}, {0, 0, 1, 1}, true) == 0.0, "reversed ranking is not 0.0");
  const auto mid = area({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}, true);
  o.require(mid && near(*mid, 0.75, 1e-15), "4-point example");
  std::mt19937_64 rng(12);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng() % 80;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 11) / 10.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(*area(s, y, true) - *area(s, y, false)));
  }
  o.require(worst <= 1e-12, "trapezoid vs Mann-Whitney " + std::to_string(worst));
  if (o.ok) {
    std::ostringstream ss;
    ss << "1.0 / 0.0 / 0.75; max trapezoid - MW gap " << worst;
    o.detail = ss.str();
  }
  return o;
}

Outcome service_contract() {
  Outcome o;
  auto ds = std::make_shared<const Dataset>(generate_synthetic(planted_cohort_spec(77), 2000));
  const auto view = feature_view(ds, "apgar1_leq7", planted_predictors());
  ModelRegistry registry;
  registry.add({"dt", PersistedModel{induce(view, {}), std::nullopt, nullptr}, "2026-01-01T00:00:00Z"});
  registry.add({"bn", PersistedModel{fit_cpts(learn_structure(view, {}), view, 1.0), std::nullopt, nullptr},
                "2026-01-01T00:00:00Z"});
  const PredictionService service(std::move(registry));
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto get = [&](const std::string& path) { return client.Get(path); };

  auto res = get("/api/schema");
  o.require(res && res->status == 200 && res->body == PredictionService::schema_document(), "GET /api/schema");
  res = get("/api/models");
  if (res && res->status == 200) {
    const auto list = json::parse(res->body);
    o.require(list.size() == 2 && list[0].at("id") == "bn" && list[1].at("kind") == "decision_tree", "model list");
  } else {
    o.require(false, "GET /api/models");
  }
  for (const std::string id : {"dt", "bn"}) {
    res = get("/api/models/" + id);
    o.require(res && res->status == 200 && json::parse(res->body).at("id") == id, "GET /api/models/" + id);
    res = get("/api/models/" + id + "/graph");
    o.require(res && res->status == 200 && res->body.find("digraph") != std::string::npos,
              "GET /api/models/" + id + "/graph");
  }
  res = client.Post("/api/models/bn/predict", R"({"evidence":{"not_a_factor":"present"}})", "application/json");
  o.require(res && res->status == 400 && json::parse(res->body).at("error").at("detail") == "not_a_factor",
            "invalid evidence is not a 400 naming the key");
  res = get("/api/models/missing");
  o.require(res && res->status == 404, "unknown model is not 404");

  // 1000 concurrent predictions, then the same bodies one at a time.
  const auto& factors = builtin_schema();
  std::mt19937_64 rng(5);
  std::vector<std::pair<std::string, std::string>> requests;
  const auto predictors = planted_predictors();
  for (int i = 0; i < 1000; ++i) {
    json ev = json::object();
    for (const auto& name : predictors)
      if (rng() % 4 == 0) ev[name] = factors.variable(factors.index_of(name)).level_labels().at(rng() % 2);
    requests.emplace_back(i % 2 ? "dt" : "bn", json{{"evidence", ev}}.dump());
  }
  std::vector<std::string> concurrent(requests.size());
  constexpr std::size_t kClients = 16;
  std::vector<std::future<void>> workers;
  for (std::size_t w = 0; w < kClients; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      httplib::Client c("127.0.0.1", port);
      c.set_keep_alive(true);
      c.set_tcp_nodelay(true);
      for (std::size_t i = w; i < requests.size(); i += kClients) {
        auto r = c.Post("/api/models/" + requests[i].first + "/predict", requests[i].second, "application/json");
        concurrent[i] = r ? std::to_string(r->status) + " " + r->body : "transport error " + httplib::to_string(r.error());
      }
    }));
  }
  for (auto& w : workers) w.get();
  std::size_t mismatches = 0;
  std::size_t non_ok = 0;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto r = client.Post("/api/models/" + requests[i].first + "/predict", requests[i].second, "application/json");
    const std::string seq = r ? std::to_string(r->status) + " " + r->body : "transport error";
    if (seq != concurrent[i] && mismatches++ == 0)
      std::fprintf(stderr, "request %zu\n  concurrent: %.200s\n  sequential: %.200s\n", i, concurrent[i].c_str(),
                   seq.c_str());
    if (!r || r->status != 200) ++non_ok;
  }
  o.require(non_ok == 0, std::to_string(non_ok) + " predictions did not return 200");
  o.require(mismatches == 0, std::to_string(mismatches) + " concurrent answers differ from the replay");

  server.stop();
  loop.join();
  if (o.ok) o.detail = "5 endpoints, 400 names the key, 1000 concurrent = sequential";
  return o;
}

}  // namespace

int main() {
  criterion("reference_matrix_metrics", 1, reference_matrix);
  criterion("smote_count_law", 5, smote_count_law);
  criterion("inference_oracle", 60, inference_oracle);
  criterion("decision_tree_oracle", 30, tree_oracle);
  criterion("planted_signal_recovery", 120, planted_recovery);
  criterion("roc_correctness", 10, roc_correctness);
  criterion("service_contract", 120, service_contract);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
