#include <doctest.h>

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abusenet/corpus.h"
#include "abusenet/error.h"
#include "support/test_support.h"

using namespace abusenet;

namespace {

const char* kHeader = "id,text,language,key,en_a1,en_a2,en_a3,en_a4,en_a5,en_a6,hi_a1,hi_a2,hi_a3,hi_a4,hi_a5\n";

// Independent tally: majority by integer comparison of signed counts.
std::optional<int> oracle_label(const std::array<int, 6>& pattern) {
  int score = 0, countable = 0;
  for (int v : pattern) {
    if (v == 0) ++score, ++countable;  // Agree
    if (v == 1) --score, ++countable;  // Disagree
  }
  if (countable == 0) return std::nullopt;
  return score >= 0 ? 1 : 0;
}

const char* cell_for(int v) {
  switch (v) {
    case 0: return "1";
    case 1: return "0";
    case 2: return "NL";
    default: return "NaN";
  }
}

Vote vote_for(int v) {
  switch (v) {
    case 0: return Vote::kAgree;
    case 1: return Vote::kDisagree;
    case 2: return Vote::kNotAnnotated;
    default: return Vote::kNotAssigned;
  }
}

LabeledExample example(const std::string& id, int y) {
  LabeledExample e;
  e.id = id;
  e.text = "text " + id;
  e.labels[1] = y;
  return e;
}

}  // namespace

TEST_CASE("vote cells decode") {
  CHECK(decode_vote("1") == Vote::kAgree);
  CHECK(decode_vote("1.0") == Vote::kAgree);
  CHECK(decode_vote("0") == Vote::kDisagree);
  CHECK(decode_vote("NL") == Vote::kNotAnnotated);
  CHECK(decode_vote("") == Vote::kNotAssigned);
  CHECK(decode_vote("NaN") == Vote::kNotAssigned);
  CHECK_THROWS_AS(decode_vote("maybe"), ParseError);
}

TEST_CASE("aggregation rules") {
  using V = Vote;
  CHECK(aggregate_label({V::kAgree, V::kAgree, V::kDisagree}) == 1);
  CHECK(aggregate_label({V::kAgree, V::kDisagree}) == 1);  // tie goes to 1
  CHECK(aggregate_label({V::kDisagree, V::kDisagree, V::kAgree}) == 0);
  CHECK(aggregate_label({V::kNotAnnotated, V::kNotAnnotated}) == std::nullopt);
  CHECK(aggregate_label({}) == std::nullopt);
  CHECK(aggregate_label({V::kAgree}) == 1);
  CHECK(aggregate_label({V::kDisagree, V::kNotAnnotated}) == 0);
}

TEST_CASE("aggregation matches the enumeration oracle on all 4^6 patterns") {
  std::size_t checked = 0;
  for (int code = 0; code < 4096; ++code) {
    std::array<int, 6> pattern;
    std::vector<Vote> votes;
    for (int slot = 0, c = code; slot < 6; ++slot, c /= 4) {
      pattern[slot] = c % 4;
      votes.push_back(vote_for(pattern[slot]));
    }
    REQUIRE(aggregate_label(votes) == oracle_label(pattern));
    ++checked;
  }
  CHECK(checked == 4096);
}

TEST_CASE("all 4^6 patterns survive the CSV path") {
  std::string csv = kHeader;
  for (int code = 0; code < 4096; ++code) {
    csv += "p" + std::to_string(code) + ",t,en,question_1";
    for (int slot = 0, c = code; slot < 6; ++slot, c /= 4) csv += std::string(",") + cell_for(c % 4);
    csv += ",NaN,NaN,NaN,NaN,NaN\n";
  }
  std::istringstream in(csv);
  const auto rows = parse_uli_stream(in, "patterns.csv");
  REQUIRE(rows.size() == 4096);
  AssembleStats stats;
  const auto examples = assemble_examples(rows, {1}, &stats);
  std::size_t expected_dropped = 0;
  std::size_t e = 0;
  for (int code = 0; code < 4096; ++code) {
    std::array<int, 6> pattern;
    for (int slot = 0, c = code; slot < 6; ++slot, c /= 4) pattern[slot] = c % 4;
    const auto want = oracle_label(pattern);
    if (!want) {
      ++expected_dropped;
      continue;
    }
    REQUIRE(e < examples.size());
    REQUIRE(examples[e].id == "p" + std::to_string(code));
    REQUIRE(examples[e].labels.at(1) == *want);
    ++e;
  }
  CHECK(e == examples.size());
  CHECK(stats.dropped_unlabeled == expected_dropped);
  CHECK(stats.groups == 4096);
}

TEST_CASE("ULI parsing reads only the row's language group") {
  std::istringstream in(std::string(kHeader) +
                        "a,hello,en,question_1,1,0,1,NL,,NaN,0,0,0,0,0\n"
                        "b,namaste,hi,question_1,NaN,NaN,NaN,NaN,NaN,NaN,1,1,0,NL,\n");
  const auto rows = parse_uli_stream(in, "x.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].votes.size() == 4);
  CHECK(rows[1].language == Language::kHi);
  CHECK(rows[1].votes.size() == 4);
  CHECK(rows[0].line == 2);
}

TEST_CASE("ULI schema and parse errors carry context") {
  {
    std::istringstream in("id,text,language,en_a1\nx,t,en,1\n");
    CHECK_THROWS_AS(parse_uli_stream(in, "nokey.csv"), SchemaError);
  }
  {
    std::istringstream in("id,text,language,key\nx,t,en,question_1\n");
    try {
      parse_uli_stream(in, "noann.csv");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("en_a1") != std::string::npos);
    }
  }
  {
    std::istringstream in(std::string(kHeader) + "a,t,en,question_1,1,1,1,1,1,1,,,,,\n" +
                          "row7,t,en,question_1,1,yes,1,1,1,1,,,,,\n");
    try {
      parse_uli_stream(in, "bad.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("bad.csv:3") != std::string::npos);
      CHECK(msg.find("row7") != std::string::npos);
    }
  }
}

TEST_CASE("assembling joins keys by id and rejects duplicates") {
  std::istringstream in(std::string(kHeader) +
                        "a,t1,en,question_1,1,1,0,,,,,,,,\n"
                        "b,t2,en,question_1,0,0,1,,,,,,,,\n"
                        "a,t1,en,question_3,0,0,0,,,,,,,,\n"
                        "b,t2,en,question_3,NL,NL,NL,,,,,,,,\n");
  const auto rows = parse_uli_stream(in, "x.csv");
  AssembleStats stats;
  const auto both = assemble_examples(rows, {1, 3}, &stats);
  REQUIRE(both.size() == 1);
  CHECK(both[0].id == "a");
  CHECK(both[0].labels.at(1) == 1);
  CHECK(both[0].labels.at(3) == 0);
  CHECK(stats.dropped_unlabeled == 1);

  const auto only1 = assemble_examples(rows, {1});
  REQUIRE(only1.size() == 2);
  CHECK(only1[1].labels.at(1) == 0);
  CHECK(only1[1].labels.count(3) == 0);

  std::istringstream dup(std::string(kHeader) + "a,t,en,question_1,1,,,,,,,,,,\n" +
                         "a,t,en,question_1,0,,,,,,,,,,\n");
  CHECK_THROWS_AS(assemble_examples(parse_uli_stream(dup, "d.csv"), {1}), DataError);
}

TEST_CASE("MACD labels are inverted and MULTILATE labels mapped") {
  std::istringstream macd("Text,Label\nabusive one,0\nclean one,1\n");
  const auto m = load_external_stream(macd, "macd.csv", Source::kMacd, Language::kHi);
  REQUIRE(m.size() == 2);
  CHECK(m[0].labels.at(1) == 1);
  CHECK(m[1].labels.at(1) == 0);
  CHECK(m[0].id == "macd:0");
  CHECK(remap_macd_label(remap_macd_label(0)) == 0);
  CHECK(remap_macd_label(remap_macd_label(1)) == 1);

  std::istringstream ml("text,label\nugly,Hate\nfine,Not-Hate\n");
  const auto h = load_external_stream(ml, "ml.csv", Source::kMultilate, Language::kEn);
  CHECK(h[0].labels.at(1) == 1);
  CHECK(h[1].labels.at(1) == 0);

  std::istringstream bad("text,label\nx,2\n");
  CHECK_THROWS_AS(load_external_stream(bad, "b.csv", Source::kMacd, Language::kHi), ParseError);
  std::istringstream ml_hi("text,label\nx,Hate\n");
  CHECK_THROWS_AS(load_external_stream(ml_hi, "m.csv", Source::kMultilate, Language::kHi),
                  ConfigError);
}

TEST_CASE("merging keeps base first and rejects a language mismatch") {
  std::vector<LabeledExample> base = {example("a", 1), example("b", 0)};
  std::vector<LabeledExample> extra = {example("macd:0", 1)};
  const auto merged = merge_external(base, extra);
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].id == "a");
  CHECK(merged[2].id == "macd:0");
  extra[0].language = Language::kTa;
  CHECK_THROWS_AS(merge_external(base, extra), ConfigError);
}

TEST_CASE("80/20 split sizes") {
  std::vector<LabeledExample> big;
  for (int i = 0; i < 6531; ++i) big.push_back(example("x" + std::to_string(i), i % 2));
  const auto s = split_train_test(big, 0.8, 1);
  CHECK(s.train.size() == 5225);
  CHECK(s.test.size() == 1306);

  std::vector<LabeledExample> ten(big.begin(), big.begin() + 10);
  const auto t = split_train_test(ten, 0.8, 1);
  CHECK(t.train.size() == 8);
  CHECK(t.test.size() == 2);
}

TEST_CASE("split is a seeded partition") {
  std::vector<LabeledExample> ex;
  for (int i = 0; i < 57; ++i) ex.push_back(example("x" + std::to_string(i), i % 3 == 0));
  for (bool stratified : {false, true}) {
    const auto opt = stratified ? std::optional<int>(1) : std::nullopt;
    const auto a = split_train_test(ex, 0.8, 7, opt);
    const auto b = split_train_test(ex, 0.8, 7, opt);
    CHECK(a.train_indices == b.train_indices);
    CHECK(a.test_indices == b.test_indices);
    std::set<std::size_t> all(a.train_indices.begin(), a.train_indices.end());
    for (std::size_t i : a.test_indices) CHECK(all.insert(i).second);
    CHECK(all.size() == ex.size());
    const auto c = split_train_test(ex, 0.8, 8, opt);
    CHECK(c.train_indices != a.train_indices);
  }
  CHECK_THROWS_AS(split_train_test(ex, 1.0, 1), ConfigError);
}

TEST_CASE("k-fold assignment") {
  const auto fa = kfold_indices(23, 5, 3);
  const auto sizes = fa.fold_sizes();
  CHECK(sizes == std::vector<std::size_t>{5, 5, 5, 4, 4});
  std::set<std::size_t> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto members = fa.fold_members(f);
    const auto rest = fa.complement(f);
    CHECK(members.size() + rest.size() == 23);
    for (std::size_t i : members) {
      CHECK(seen.insert(i).second);
      CHECK(std::find(rest.begin(), rest.end(), i) == rest.end());
    }
  }
  CHECK(seen.size() == 23);
  CHECK(kfold_indices(23, 5, 3).membership == fa.membership);
  CHECK(kfold_indices(23, 5, 4).membership != fa.membership);
  CHECK_THROWS_AS(kfold_indices(4, 5, 1), ConfigError);
  CHECK_THROWS_AS(kfold_indices(10, 1, 1), ConfigError);
}

TEST_CASE("dataset JSONL round-trip") {
  testsupport::TempDir dir;
  std::vector<LabeledExample> ex = {example("a", 1), example("b", 0)};
  ex[0].labels[3] = 1;
  ex[1].text = "quote \" comma , newline\n unicode हि";
  ex[1].source = Source::kMacd;
  ex[1].language = Language::kHi;
  write_dataset_jsonl(dir.file("d.jsonl"), ex);
  CHECK(read_dataset_jsonl(dir.file("d.jsonl")) == ex);
}
