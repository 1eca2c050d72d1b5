#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = natal_risk::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("natal_risk_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("generate, train and export a planted tree") {
  TempDir dir;
  auto r = run({"generate", "--n", "3000", "--seed", "5", "--output", dir / "cohort.csv"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir / "cohort.csv").rfind("age_gt35,", 0) == 0);

  const std::vector<std::string> train = {"train", "--input", dir / "cohort.csv", "--target", "apgar1_leq7",
                                          "--add-predictors", "ventilated_at_birth", "--seed", "3", "--output",
                                          dir / "dt.json"};
  r = run(train);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("=== Confusion Matrix ===") != std::string::npos);
  const auto model = json::parse(slurp(dir / "dt.json"));
  CHECK(model.at("kind") == "decision_tree");
  CHECK(model.at("nodes")[0].at("feature") == "ventilated_at_birth");
  CHECK(model.at("metrics").at("accuracy").get<double>() >= 0.95);
  CHECK(model.at("evaluation").at("protocol").at("folds") == 10);

  const auto first = slurp(dir / "dt.json");
  auto again = train;
  again.back() = dir / "dt2.json";
  REQUIRE(run(again).code == 0);
  CHECK(slurp(dir / "dt2.json") == first);

  r = run({"export-dot", "--model", dir / "dt.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("label=\"ventilated_at_birth\"") != std::string::npos);
}

TEST_CASE("bayes net training and evaluation modes") {
  TempDir dir;
  REQUIRE(run({"generate", "--n", "800", "--seed", "2", "--output", dir / "c.csv"}).code == 0);
  auto r = run({"train", "--input", dir / "c.csv", "--learner", "bn", "--add-predictors", "ventilated_at_birth",
                "--folds", "5", "--smote-percent", "100", "--output", dir / "bn.json"});
  REQUIRE(r.code == 0);
  const auto bn = json::parse(slurp(dir / "bn.json"));
  CHECK(bn.at("kind") == "bayes_net");
  CHECK(bn.at("evaluation").at("protocol").at("smote") == "before_folds");

  r = run({"evaluate", "--input", dir / "c.csv", "--folds", "5", "--smote-percent", "100", "--smote-in-folds",
           "--json"});
  REQUIRE(r.code == 0);
  const auto report = json::parse(r.out);
  CHECK(report.at("protocol").at("smote") == "in_folds");
  CHECK(report.at("confusion_matrix").at("counts").size() == 2);

  r = run({"evaluate", "--input", dir / "c.csv", "--add-predictors", "ventilated_at_birth", "--model", dir / "bn.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("Accuracy:") != std::string::npos);
}

TEST_CASE("smote verb adds minority records") {
  TempDir dir;
  REQUIRE(run({"generate", "--n", "300", "--seed", "4", "--output", dir / "c.csv"}).code == 0);
  auto r = run({"smote", "--input", dir / "c.csv", "--target", "apgar1_leq7", "--percent", "200", "--k", "5",
                "--seed", "1", "--output", dir / "s.csv", "--provenance"});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "s.csv");
  std::size_t smote_rows = 0;
  for (std::size_t at = text.find(",smote\n"); at != std::string::npos; at = text.find(",smote\n", at + 1)) ++smote_rows;
  const auto original = slurp(dir / "c.csv");
  const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  CHECK(lines(text) == lines(original) + static_cast<long>(smote_rows));
  CHECK(smote_rows > 0);
  CHECK(smote_rows % 2 == 0);
}

TEST_CASE("single-class input trains a leaf with a warning") {
  TempDir dir;
  std::string csv;
  {
    REQUIRE(run({"generate", "--n", "50", "--seed", "1", "--output", dir / "c.csv"}).code == 0);
    std::istringstream in(slurp(dir / "c.csv"));
    std::string line;
    std::getline(in, line);
    csv = line + "\n";
    const auto header = line;
    std::size_t col = 0;
    for (std::size_t i = 0, c = 0; i < header.size(); ++i) {
      if (header.compare(i, 12, "apgar1_leq7,") == 0 && (i == 0 || header[i - 1] == ',')) col = c;
      if (header[i] == ',') ++c;
    }
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (line.back() == ',') cells.push_back("");
      cells[col] = "0";
      std::string out;
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      csv += out + "\n";
    }
  }
  std::ofstream(dir / "single.csv") << csv;
  const auto r = run({"train", "--input", dir / "single.csv", "--output", dir / "leaf.json"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("\"warning\"") != std::string::npos);
  const auto model = json::parse(slurp(dir / "leaf.json"));
  CHECK(model.at("nodes").size() == 1);
  CHECK(model.at("nodes")[0].at("feature").is_null());
}

TEST_CASE("errors are machine readable") {
  TempDir dir;
  auto r = run({"train", "--input", dir / "missing.csv", "--output", dir / "m.json"});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err).at("error").at("code") == "Io");

  std::ofstream(dir / "bad.csv") << "twins\n1\n";
  r = run({"train", "--input", dir / "bad.csv", "--output", dir / "m.json"});
  CHECK(r.code != 0);
  CHECK(json::parse(r.err).at("error").at("code") == "MissingColumn");

  REQUIRE(run({"generate", "--n", "40", "--output", dir / "c.csv"}).code == 0);
  r = run({"train", "--input", dir / "c.csv", "--target", "nope", "--output", dir / "m.json"});
  CHECK(json::parse(r.err).at("error").at("code") == "UnknownName");

  r = run({"train", "--input", dir / "c.csv"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("error").at("code") == "Usage");

  r = run({"bogus"});
  CHECK(r.code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("serve fails on a missing model directory") {
  TempDir dir;
  setenv("NATAL_RISK_MODEL_DIR", (dir / "none").c_str(), 1);
  auto r = run({"serve", "--port", "0"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("error").at("code") == "Io");
  unsetenv("NATAL_RISK_MODEL_DIR");
}
