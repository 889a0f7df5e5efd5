#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include <json.hpp>

#include "abusenet/commands.h"
#include "abusenet/csv.h"
#include "abusenet/error.h"
#include "support/test_support.h"

using namespace abusenet;
namespace fs = std::filesystem;

namespace {

const std::string kData = ABUSENET_TEST_DATA_DIR;
const std::string kCorpus = kData + "/synthetic/corpus.csv";
const std::string kVectors = kData + "/synthetic/vectors.txt";

struct Captured {
  int code = 0;
  std::string out;
  std::string err;
};

template <typename Opts, typename Fn>
Captured call(Fn fn, const Opts& opts) {
  std::ostringstream out, err;
  Captured c;
  c.code = fn(opts, out, err);
  c.out = out.str();
  c.err = err.str();
  return c;
}

std::string write_config(const testsupport::TempDir& dir, const std::string& prepared, int epochs,
                         bool multitask = true) {
  nlohmann::json cfg = {
      {"data", {{"prepared", prepared}, {"embeddings", kVectors}}},
      {"preprocess",
       {{"stopwords", {{"en", kData + "/stopwords/en.txt"}}},
        {"emoji_ranges", kData + "/emoji_ranges.txt"}}},
      {"model",
       {{"seq_len", 30}, {"embed_dim", 300}, {"conv_filters", 8}, {"lstm_units", 8},
        {"dense_units", 8}}},
      {"train", {{"epochs", epochs}, {"seed", 7}, {"multitask", multitask}}},
  };
  const std::string path = dir.file("config.json");
  testsupport::write_file(path, cfg.dump(2));
  return path;
}

Captured prepare(const std::string& out, int task) {
  PrepareOptions p;
  p.input = kCorpus;
  p.language = "en";
  p.task = task;
  p.out = out;
  return call(cmd_prepare, p);
}

}  // namespace

TEST_CASE("prepare writes the canonical files") {
  testsupport::TempDir dir;
  const auto r = prepare(dir.file("prep"), 1);
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  for (const char* f : {"dataset.jsonl", "train.jsonl", "test.jsonl", "split.json",
                        "test_input.csv", "test_gold.csv", "stats.json"})
    CHECK(fs::exists(dir.path() / "prep" / f));
  const auto stats = nlohmann::json::parse(testsupport::read_file(dir.file("prep/stats.json")));
  CHECK(stats["task"] == 1);
  CHECK(stats["language"] == "en");
  const std::size_t n = stats["examples"];
  CHECK(n >= 190);
  CHECK(stats["train_size"].get<std::size_t>() + stats["test_size"].get<std::size_t>() == n);
  const auto gold = CsvTable::read_file(dir.file("prep/test_gold.csv"));
  CHECK(gold.header() == std::vector<std::string>{"id", "label"});
  CHECK(gold.rows().size() == stats["test_size"].get<std::size_t>());

  CHECK(prepare(dir.file("prep3"), 3).code == kExitOk);
  const auto gold3 = CsvTable::read_file(dir.file("prep3/test_gold.csv"));
  CHECK(gold3.header() == std::vector<std::string>{"id", "label_1", "label_3"});
}

TEST_CASE("prepare rejects bad arguments") {
  testsupport::TempDir dir;
  CHECK(prepare(dir.file("p"), 4).code == kExitUsage);
  PrepareOptions p;
  p.input = kCorpus;
  p.language = "fr";
  p.out = dir.file("p");
  CHECK(call(cmd_prepare, p).code == kExitUsage);
  p.language = "en";
  p.external = {"macd:" + dir.file("none.csv")};
  CHECK(call(cmd_prepare, p).code == kExitUsage);
  p.external.clear();
  p.input = dir.file("missing.csv");
  CHECK(call(cmd_prepare, p).code == kExitUsage);
}

TEST_CASE("train, predict and evaluate on the bundled corpus") {
  testsupport::TempDir dir;
  REQUIRE(prepare(dir.file("prep"), 1).code == kExitOk);
  const std::string cfg = write_config(dir, dir.file("prep"), 2);

  TrainOptions t;
  t.config = cfg;
  t.out_dir = dir.file("run");
  t.quiet = true;
  const auto trained = call(cmd_train, t);
  REQUIRE_MESSAGE(trained.code == kExitOk, trained.err);
  for (const char* f : {"run_manifest.json", "run_report.json", "curves.csv", "curves_mean.csv",
                        "curves_fold1.svg", "curves_mean.svg", "vocab.txt", "stopwords.txt",
                        "fold_1/manifest.json", "fold_5/weights.bin"})
    CHECK_MESSAGE(fs::exists(dir.path() / "run" / f), f);
  CHECK(testsupport::read_file(dir.file("run/curves.csv")).size() > 0);
  const auto curves = read_curves(dir.file("run/curves.csv"));
  CHECK(curves.size() == 10);

  PredictOptions p;
  p.run_dir = dir.file("run");
  p.input = dir.file("prep/test_input.csv");
  p.out = dir.file("pred.csv");
  const auto predicted = call(cmd_predict, p);
  REQUIRE_MESSAGE(predicted.code == kExitOk, predicted.err);
  const auto pred = CsvTable::read_file(p.out);
  const auto gold = CsvTable::read_file(dir.file("prep/test_gold.csv"));
  CHECK(pred.header() == std::vector<std::string>{"id", "label"});
  CHECK(pred.rows().size() == gold.rows().size());

  EvaluateOptions e{dir.file("prep/test_gold.csv"), p.out};
  const auto scored = call(cmd_evaluate, e);
  REQUIRE_MESSAGE(scored.code == kExitOk, scored.err);
  const auto j = nlohmann::json::parse(scored.out);
  CHECK(j.contains("f1_macro"));

  SUBCASE("same seed reproduces the run") {
    t.out_dir = dir.file("run2");
    REQUIRE(call(cmd_train, t).code == kExitOk);
    CHECK(testsupport::read_file(dir.file("run/run_report.json")) ==
          testsupport::read_file(dir.file("run2/run_report.json")));
    CHECK(testsupport::read_file(dir.file("run/fold_3/weights.bin")) ==
          testsupport::read_file(dir.file("run2/fold_3/weights.bin")));
    p.run_dir = dir.file("run2");
    p.out = "-";
    const auto again = call(cmd_predict, p);
    CHECK(again.out == testsupport::read_file(dir.file("pred.csv")));
  }

  SUBCASE("missing checkpoint is reported") {
    fs::remove_all(dir.path() / "run" / "fold_2");
    CHECK(call(cmd_predict, p).code == kExitUsage);
  }

  SUBCASE("corrupted weights are reported") {
    testsupport::write_file(dir.file("run/fold_1/weights.bin"), "xx");
    const auto r = call(cmd_predict, p);
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("error") != std::string::npos);
  }
}

TEST_CASE("task 3 with separate models per label") {
  testsupport::TempDir dir;
  REQUIRE(prepare(dir.file("prep"), 3).code == kExitOk);
  TrainOptions t;
  t.config = write_config(dir, dir.file("prep"), 1, false);
  t.out_dir = dir.file("run");
  t.quiet = true;
  const auto trained = call(cmd_train, t);
  REQUIRE_MESSAGE(trained.code == kExitOk, trained.err);
  CHECK(fs::exists(dir.path() / "run" / "label_1" / "fold_1" / "manifest.json"));
  CHECK(fs::exists(dir.path() / "run" / "label_3" / "fold_5" / "manifest.json"));

  PredictOptions p;
  p.run_dir = dir.file("run");
  p.input = dir.file("prep/test_input.csv");
  const auto predicted = call(cmd_predict, p);
  REQUIRE(predicted.code == kExitOk);
  CHECK(predicted.out.rfind("id,label_1,label_3\n", 0) == 0);

  testsupport::write_file(dir.file("pred.csv"), predicted.out);
  EvaluateOptions e{dir.file("prep/test_gold.csv"), dir.file("pred.csv")};
  const auto scored = call(cmd_evaluate, e);
  REQUIRE(scored.code == kExitOk);
  const auto j = nlohmann::json::parse(scored.out);
  CHECK(j.contains("label_1"));
  CHECK(j.contains("label_3"));
}

TEST_CASE("train refuses a task/config conflict") {
  testsupport::TempDir dir;
  REQUIRE(prepare(dir.file("prep"), 1).code == kExitOk);
  nlohmann::json cfg = {{"data", {{"prepared", dir.file("prep")}, {"embeddings", kVectors}}},
                        {"train", {{"task", 2}}}};
  testsupport::write_file(dir.file("c.json"), cfg.dump());
  TrainOptions t;
  t.config = dir.file("c.json");
  t.out_dir = dir.file("run");
  CHECK(call(cmd_train, t).code == kExitUsage);
}

TEST_CASE("evaluate") {
  testsupport::TempDir dir;
  testsupport::write_file(dir.file("gold.csv"), "id,label\na,0\nb,0\nc,1\nd,1\ne,1\n");
  testsupport::write_file(dir.file("pred.csv"), "id,label\ne,1\nd,1\nc,0\nb,1\na,0\n");

  auto r = call(cmd_evaluate, EvaluateOptions{dir.file("gold.csv"), dir.file("gold.csv")});
  REQUIRE(r.code == kExitOk);
  CHECK(nlohmann::json::parse(r.out)["f1_macro"].get<double>() == 1.0);

  r = call(cmd_evaluate, EvaluateOptions{dir.file("gold.csv"), dir.file("pred.csv")});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["f1_macro"].get<double>() == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  CHECK(j["precision_macro"].get<double>() == doctest::Approx(7.0 / 12.0).epsilon(1e-12));

  testsupport::write_file(dir.file("other.csv"), "id,label\nx,0\ny,1\n");
  r = call(cmd_evaluate, EvaluateOptions{dir.file("gold.csv"), dir.file("other.csv")});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("x (not in gold)") != std::string::npos);
  CHECK(r.err.find("a (missing from predictions)") != std::string::npos);

  testsupport::write_file(dir.file("bad.csv"), "id,label\na,2\nb,0\nc,1\nd,1\ne,1\n");
  CHECK(call(cmd_evaluate, EvaluateOptions{dir.file("gold.csv"), dir.file("bad.csv")}).code ==
        kExitUsage);
  testsupport::write_file(dir.file("dup.csv"), "id,label\na,0\na,0\nc,1\nd,1\ne,1\n");
  CHECK(call(cmd_evaluate, EvaluateOptions{dir.file("gold.csv"), dir.file("dup.csv")}).code ==
        kExitUsage);
}

TEST_CASE("inspect-embeddings") {
  testsupport::TempDir dir;
  testsupport::write_file(dir.file("v.txt"), "alpha 1 2 3\nbeta 4 5 6\nalpha 7 8 9\n");
  testsupport::write_file(dir.file("vocab.txt"), "<pad>\n<unk>\nalpha\ngamma\n");
  const auto r = call(cmd_inspect_embeddings, InspectOptions{dir.file("v.txt"), dir.file("vocab.txt")});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(r.out == "dimension: 3\nentries: 2\nheader: no\nduplicates: 1\ncoverage: 0.5000 (1/2)\n");

  const auto bundled = call(cmd_inspect_embeddings, InspectOptions{kVectors, ""});
  CHECK(bundled.out.find("dimension: 300\n") != std::string::npos);
  CHECK(bundled.out.find("header: yes\n") != std::string::npos);

  CHECK(call(cmd_inspect_embeddings, InspectOptions{dir.file("none.txt"), ""}).code == kExitUsage);
}

TEST_CASE("exit code mapping") {
  std::ostringstream err;
  CHECK(run_guarded([] {}, err) == kExitOk);
  CHECK(run_guarded([] { throw NumericError("nan"); }, err) == kExitNumeric);
  CHECK(run_guarded([] { throw ConfigError("x"); }, err) == kExitUsage);
  CHECK(run_guarded([] { throw CorruptionError("x"); }, err) == kExitUsage);
  CHECK(run_guarded([] { throw std::runtime_error("x"); }, err) == kExitInternal);
}
