#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "natal_risk/dtree.hpp"
#include "natal_risk/error.hpp"
#include "natal_risk/synthetic.hpp"

using namespace natal_risk;
using oracle::Row;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

std::vector<Row> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t features, double missing = 0.0) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Row> rows(n);
  for (auto& r : rows) {
    for (std::size_t f = 0; f < features; ++f) r.x.push_back(u(rng) < missing ? -1 : static_cast<int>(rng() % 2));
    r.y = static_cast<int>(rng() % 2);
  }
  return rows;
}

TreeParams unpruned() {
  TreeParams p;
  p.prune = false;
  return p;
}

// The textbook 14-day play-tennis data, outlook encoded in birth_weight's
// three bins, humidity/windy as binary factors.
DatasetView play_tennis() {
  // outlook: 0 sunny, 1 overcast, 2 rain
  const int outlook[14] = {0, 0, 1, 2, 2, 2, 1, 0, 0, 2, 0, 1, 1, 2};
  const int humid[14] = {1, 1, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1};
  const int windy[14] = {0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1};
  const int play[14] = {0, 0, 1, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0};
  std::vector<PatientRecord> records;
  for (int i = 0; i < 14; ++i) {
    records.push_back(fixture::record({{"birth_weight", static_cast<Level>(outlook[i])},
                                       {"hypertension", static_cast<Level>(humid[i])},
                                       {"twins", static_cast<Level>(windy[i])},
                                       {"apgar1_leq7", static_cast<Level>(play[i])}}));
  }
  return feature_view(fixture::dataset(records), "apgar1_leq7", {"birth_weight", "hypertension", "twins"});
}

}  // namespace

TEST_CASE("entropy") {
  const std::vector<std::size_t> pure{12, 0};
  const std::vector<std::size_t> even{7, 7};
  const std::vector<std::size_t> nine_five{9, 5};
  CHECK(entropy(pure) == 0.0);
  CHECK(entropy(even) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy(nine_five) == doctest::Approx(0.940286).epsilon(1e-6));
  CHECK(entropy(nine_five) == doctest::Approx(oracle::entropy_bits({9, 5})).epsilon(1e-12));
  const std::vector<std::size_t> zero{0, 0};
  CHECK(code_of([&] { (void)entropy(zero); }) == ErrorCode::AllZeroCounts);
}

TEST_CASE("gain ratio on small hand examples") {
  std::vector<Row> perfect = {{{0}, 0}, {{0}, 0}, {{1}, 1}, {{1}, 1}};
  const auto view = fixture::view_from_rows(perfect, 1);
  CHECK(gain_ratio(view, "age_gt35") == doctest::Approx(1.0));
  std::vector<Row> constant = {{{1}, 0}, {{1}, 0}, {{1}, 1}, {{1}, 1}};
  CHECK(gain_ratio(fixture::view_from_rows(constant, 1), "age_gt35") == 0.0);
  CHECK(code_of([&] { (void)gain_ratio(view, "twins"); }) == ErrorCode::UnknownFeature);
}

TEST_CASE("gain ratio on the 14-record play data matches the contingency table") {
  const auto view = play_tennis();
  std::vector<Row> rows;
  for (std::size_t i = 0; i < view.size(); ++i) {
    Row r;
    for (auto p : view.predictors()) r.x.push_back(view.value(i, p));
    r.y = view.label(i);
    rows.push_back(r);
  }
  // predictors in schema order: hypertension, birth_weight, twins
  const auto names = view.predictor_names();
  for (std::size_t f = 0; f < names.size(); ++f)
    CHECK(gain_ratio(view, names[f]) == doctest::Approx(oracle::split_on(rows, f).ratio).epsilon(1e-12));
  // Outlook: gain 0.2467 bits, split info 1.5774 bits.
  CHECK(gain_ratio(view, "birth_weight") == doctest::Approx(0.246750 / 1.577406).epsilon(1e-5));
}

TEST_CASE("gain with missing values is scaled by the known fraction") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto rows = random_rows(rng, 16, 3, 0.25);
    const auto view = fixture::view_from_rows(rows, 3);
    const auto names = fixture::first_factors(3);
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(gain_ratio(view, names[f]) == doctest::Approx(oracle::split_on(rows, f).ratio).epsilon(1e-12));
      CHECK(information_gain(view, view.predictors()[f]) ==
            doctest::Approx(oracle::split_on(rows, f).gain).epsilon(1e-12));
    }
  }
}

TEST_CASE("root split matches the brute-force choice") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t features = 1 + rng() % 4;
    const std::size_t n = 1 + rng() % 20;
    const auto rows = random_rows(rng, n, features);
    const auto view = fixture::view_from_rows(rows, features);
    const auto model = induce(view, unpruned());
    const auto expected = oracle::best_root(rows, features, 2);
    if (!expected) {
      CHECK(model.root().is_leaf());
    } else {
      REQUIRE_FALSE(model.root().is_leaf());
      CHECK(static_cast<std::size_t>(model.root().feature) == *expected);
    }
  }
}

TEST_CASE("induce stops on single-class views") {
  std::vector<Row> rows = {{{0, 1}, 1}, {{1, 0}, 1}, {{1, 1}, 1}};
  const auto model = induce(fixture::view_from_rows(rows, 2), {});
  CHECK(model.nodes.size() == 1);
  CHECK(model.root().predicted == 1);
  const auto r = predict_tree(model, {{"age_gt35", 1}});
  CHECK(r.path.empty());
  CHECK(r.predicted == 1);
}

TEST_CASE("induce recovers the planted root") {
  const auto ds = std::make_shared<const Dataset>(generate_synthetic(planted_cohort_spec(2), 3000));
  auto predictors = factor_names(builtin_schema());
  predictors.push_back("ventilated_at_birth");
  const auto view = feature_view(ds, "apgar1_leq7", predictors);
  const auto model = induce(view, {});
  REQUIRE_FALSE(model.root().is_leaf());
  CHECK(model.features[static_cast<std::size_t>(model.root().feature)].name == "ventilated_at_birth");
  CHECK(induce(view, {}) == model);
  CHECK(code_of([] { (void)induce(fixture::view_from_rows({{{0}, 0}}, 1).subset(std::vector<std::size_t>{}), {}); }) ==
        ErrorCode::EmptyView);
}

TEST_CASE("tree invariants: counts add up and children follow parents") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    const auto rows = random_rows(rng, 40, 4, 0.1);
    const auto model = induce(fixture::view_from_rows(rows, 4), unpruned());
    CHECK(model.root().total() == 40);
    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
      const auto& n = model.nodes[i];
      if (n.is_leaf()) continue;
      std::vector<std::size_t> sum(2, 0);
      for (auto c : n.children) {
        if (c == TreeNode::kNoChild) continue;
        CHECK(static_cast<std::size_t>(c) > i);
        for (std::size_t k = 0; k < 2; ++k) sum[k] += model.nodes[static_cast<std::size_t>(c)].counts[k];
      }
      CHECK(sum == n.counts);
    }
    CHECK(model.edge_count() + 1 == model.nodes.size());
  }
}

TEST_CASE("pessimistic bound matches the Wilson upper limit") {
  for (double n : {1.0, 6.0, 14.0, 100.0}) {
    for (double e : {0.0, 1.0, 3.0}) {
      if (e > n) continue;
      CHECK(pessimistic_error_bound(n, e, 0.25) == doctest::Approx(oracle::pessimistic_errors(n, e, oracle::kZ25)).epsilon(1e-9));
    }
  }
  CHECK(pessimistic_error_bound(0, 0, 0.25) == 0.0);
}

TEST_CASE("pruning a hand-built three-leaf tree") {
  // root on age_gt35: absent -> leaf (6, 0); present -> node on hypertension
  // with leaves (1, 2) and (0, 5). Leaf counts as given.
  DecisionTreeModel m;
  m.target = variable_info(builtin_schema().variable(builtin_schema().index_of("apgar1_leq7")));
  m.features = {variable_info(builtin_schema().variable(0)), variable_info(builtin_schema().variable(2))};
  m.nodes = {
      {0, {1, 2}, {7, 7}, 0},
      {TreeNode::kLeaf, {}, {6, 0}, 0},
      {1, {3, 4}, {1, 7}, 1},
      {TreeNode::kLeaf, {}, {1, 2}, 1},
      {TreeNode::kLeaf, {}, {0, 5}, 1},
  };
  m.params.confidence = 0.25;
  const double z = oracle::kZ25;
  const double sub = oracle::pessimistic_errors(3, 1, z) + oracle::pessimistic_errors(5, 0, z);
  const double leaf = oracle::pessimistic_errors(8, 1, z);
  CHECK(subtree_error_bound(m, 2, 0.25) == doctest::Approx(sub).epsilon(1e-12));
  // About 1.8 vs 2.0 errors: the inner node collapses.
  REQUIRE(leaf < sub);
  const auto view = fixture::view_from_rows({{{0, 0, 0}, 0}}, 3);
  const auto pruned = prune(m, view);
  CHECK(pruned.nodes.size() == 3);
  CHECK(pruned.nodes[2].is_leaf());
  CHECK(pruned.nodes[2].counts == std::vector<std::size_t>{1, 7});
  CHECK(prune(pruned, view) == pruned);
}

TEST_CASE("pruning collapses same-class siblings and leaves a leaf alone") {
  DecisionTreeModel m;
  m.target = variable_info(builtin_schema().variable(builtin_schema().index_of("apgar1_leq7")));
  m.features = {variable_info(builtin_schema().variable(0))};
  m.nodes = {{0, {1, 2}, {9, 2}, 0}, {TreeNode::kLeaf, {}, {5, 1}, 0}, {TreeNode::kLeaf, {}, {4, 1}, 0}};
  m.params.confidence = 0.25;
  const auto view = fixture::view_from_rows({{{0}, 0}}, 1);
  const auto pruned = prune(m, view);
  CHECK(pruned.nodes.size() == 1);
  CHECK(prune(pruned, view) == pruned);

  const auto other = feature_view(fixture::dataset({fixture::blank()}), "ventilated_at_birth", {"age_gt35"});
  CHECK(code_of([&] { (void)prune(m, other); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("pruning never adds nodes") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const auto rows = random_rows(rng, 30, 4);
    const auto view = fixture::view_from_rows(rows, 4);
    const auto full = induce(view, unpruned());
    const auto pruned = prune(full, view);
    CHECK(pruned.nodes.size() <= full.nodes.size());
    CHECK(prune(pruned, view) == pruned);
  }
}

TEST_CASE("prediction follows evidence and smooths leaf counts") {
  DecisionTreeModel m;
  m.target = variable_info(builtin_schema().variable(builtin_schema().index_of("apgar1_leq7")));
  m.features = {variable_info(builtin_schema().variable(builtin_schema().index_of("ventilated_at_birth")))};
  m.nodes = {{0, {1, 2}, {30, 10}, 0}, {TreeNode::kLeaf, {}, {30, 0}, 0}, {TreeNode::kLeaf, {}, {0, 10}, 1}};

  auto r = predict_tree(m, {{"ventilated_at_birth", 1}});
  CHECK(r.predicted_label == "present");
  CHECK(r.distribution[0] == doctest::Approx(1.0 / 12));
  CHECK(r.distribution[1] == doctest::Approx(11.0 / 12));
  REQUIRE(r.path.size() == 1);
  CHECK(r.path[0] == PathStep{"ventilated_at_birth", "present", false});

  r = predict_tree(m, {{"twins", 1}});
  CHECK(r.predicted == 0);
  CHECK(r.path[0].imputed);
  CHECK(r.path[0].value == "absent");

  CHECK(code_of([&] { (void)predict_tree(m, {{"bogus", 1}}); }) == ErrorCode::UnknownFeature);
  CHECK(code_of([&] { (void)predict_tree(m, {{"ventilated_at_birth", 4}}); }) == ErrorCode::BadEvidence);
}

TEST_CASE("unseen levels are routed like missing values") {
  DecisionTreeModel m;
  m.target = variable_info(builtin_schema().variable(builtin_schema().index_of("apgar1_leq7")));
  m.features = {variable_info(builtin_schema().variable(builtin_schema().index_of("birth_weight")))};
  m.nodes = {{0, {1, 2, TreeNode::kNoChild}, {3, 8}, 1},
             {TreeNode::kLeaf, {}, {3, 0}, 0},
             {TreeNode::kLeaf, {}, {0, 8}, 1}};
  const auto r = predict_tree(m, {{"birth_weight", 2}});
  CHECK(r.path[0].imputed);
  CHECK(r.path[0].value == "2500to4000");
  CHECK(r.predicted == 1);
}

TEST_CASE("DOT export") {
  DecisionTreeModel m;
  m.target = variable_info(builtin_schema().variable(builtin_schema().index_of("apgar1_leq7")));
  m.features = {variable_info(builtin_schema().variable(builtin_schema().index_of("ventilated_at_birth")))};
  m.nodes = {{0, {1, 2}, {30, 10}, 0}, {TreeNode::kLeaf, {}, {30, 0}, 0}, {TreeNode::kLeaf, {}, {0, 10}, 1}};
  const auto dot = export_tree_dot(m);
  CHECK(dot.rfind("digraph decision_tree {", 0) == 0);
  CHECK(dot.find("n0 [shape=ellipse, label=\"ventilated_at_birth\"]") != std::string::npos);
  CHECK(dot.find("n0 -> n2 [label=\"present\"]") != std::string::npos);
  CHECK(dot.find("apgar1_leq7 = present\\n(0/10)") != std::string::npos);
  CHECK(dot.back() == '\n');
}

TEST_CASE("tree params are validated") {
  TreeParams p;
  p.min_leaf = 0;
  CHECK(code_of([&] { validate(p); }) == ErrorCode::InvalidParams);
  p = {};
  p.confidence = 1.0;
  CHECK(code_of([&] { validate(p); }) == ErrorCode::InvalidParams);
}
