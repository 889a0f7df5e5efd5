#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>

#include "abusenet/embeddings.h"
#include "abusenet/error.h"
#include "abusenet/rng.h"
#include "support/test_support.h"

using namespace abusenet;

namespace {

WordVectorFile random_vectors(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  WordVectorFile f;
  std::vector<float> v(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
    f.put("w" + std::to_string(i), v);
  }
  return f;
}

}  // namespace

TEST_CASE("parse without and with a header line") {
  std::istringstream plain("the 0.1 0.2 0.3\ncat -1 2.5 3e-2\n");
  const auto a = parse_vector_stream(plain, "plain.vec");
  CHECK(a.dimension() == 3);
  CHECK(a.size() == 2);
  CHECK_FALSE(a.had_header());
  CHECK(a.find("cat")[1] == doctest::Approx(2.5f));
  CHECK(a.find("dog").empty());

  std::istringstream header("2 3\nthe 0.1 0.2 0.3\ncat -1 2.5 3e-2\n");
  const auto b = parse_vector_stream(header, "ft.vec");
  CHECK(b.had_header());
  CHECK(b.size() == 2);
  CHECK(b.dimension() == 3);
}

TEST_CASE("multi-token words and duplicates") {
  std::istringstream in("x 3 4\nnew york 1 2\nx 5 6\n");
  const auto f = parse_vector_stream(in, "multi.vec");
  CHECK(f.dimension() == 2);
  CHECK_FALSE(f.find("new york").empty());
  CHECK(f.duplicate_count() == 1);
}

TEST_CASE("malformed vector files report the line") {
  auto expect_line = [](const std::string& text, const std::string& where) {
    std::istringstream in(text);
    try {
      parse_vector_stream(in, "bad.vec");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  };
  expect_line("a 1 2 3\nb 1 2\n", "bad.vec:2");
  expect_line("a 1 2 3\nb 1 x 3\n", "bad.vec:2");
  expect_line("a 1 2 3\nb 1 nan 3\n", "bad.vec:2");
  expect_line("a 1 2 3\nb 1 2 inf\n", "bad.vec:2");
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_vector_stream(empty, "e.vec"), ParseError);
}

TEST_CASE("text round-trip within 1e-6 and header detection") {
  testsupport::TempDir dir;
  const auto f = random_vectors(50, 300, 11);
  write_vector_file(dir.file("v.txt"), f, false);
  write_vector_file(dir.file("vh.txt"), f, true);
  const auto a = parse_vector_file(dir.file("v.txt"));
  const auto b = parse_vector_file(dir.file("vh.txt"));
  CHECK_FALSE(a.had_header());
  CHECK(b.had_header());
  REQUIRE(a.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto want = f.row(i);
    const auto got = a.find(f.words()[i]);
    REQUIRE(got.size() == want.size());
    for (std::size_t d = 0; d < want.size(); ++d) REQUIRE(std::abs(got[d] - want[d]) <= 1e-6);
  }
}

TEST_CASE("binary cache is value-identical") {
  testsupport::TempDir dir;
  const auto f = random_vectors(40, 17, 5);
  write_vector_cache(dir.file("c.bin"), f);
  const auto g = read_vector_cache(dir.file("c.bin"));
  CHECK(g == f);

  // Truncated and garbage caches are rejected.
  std::string bytes = testsupport::read_file(dir.file("c.bin"));
  testsupport::write_file(dir.file("short.bin"), bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(read_vector_cache(dir.file("short.bin")), CorruptionError);
  testsupport::write_file(dir.file("junk.bin"), "NOPE and more");
  CHECK_THROWS_AS(read_vector_cache(dir.file("junk.bin")), CorruptionError);
}

TEST_CASE("load_vectors writes then reuses the cache") {
  testsupport::TempDir dir;
  const auto f = random_vectors(10, 4, 9);
  write_vector_file(dir.file("v.txt"), f);
  const auto first = load_vectors(dir.file("v.txt"), dir.file("v.cache"));
  CHECK(std::filesystem::exists(dir.file("v.cache")));
  const auto second = load_vectors(dir.file("v.txt"), dir.file("v.cache"));
  CHECK(first == second);
}

TEST_CASE("matrix build aligns rows with the vocabulary") {
  const Vocabulary vocab = build_vocab({{"w1", "w2", "missing"}}, 1);
  const auto f = random_vectors(5, 300, 3);
  const EmbeddingTable t = build_matrix(vocab, f);
  CHECK(t.rows == vocab.size());
  CHECK(t.dim == 300);
  for (float x : t.row(kPadIndex)) CHECK(x == 0.0f);
  for (float x : t.row(kOovIndex)) CHECK(x == 0.0f);
  for (float x : t.row(vocab.index_of("missing"))) CHECK(x == 0.0f);
  const auto want = f.find("w2");
  const auto got = t.row(vocab.index_of("w2"));
  for (std::size_t d = 0; d < 300; ++d) CHECK(got[d] == want[d]);
  CHECK(t.found == 2);
  CHECK(t.coverage == doctest::Approx(2.0 / 3.0));

  BuildMatrixOptions random;
  random.random_missing = true;
  random.seed = 4;
  const EmbeddingTable r = build_matrix(vocab, f, random);
  bool any_nonzero = false;
  for (float x : r.row(vocab.index_of("missing"))) {
    CHECK(std::abs(x) <= 0.05f);
    any_nonzero |= x != 0.0f;
  }
  CHECK(any_nonzero);
  for (float x : r.row(kPadIndex)) CHECK(x == 0.0f);

  BuildMatrixOptions wrong;
  wrong.expected_dim = 100;
  CHECK_THROWS_AS(build_matrix(vocab, f, wrong), ConfigError);
}

TEST_CASE("disjoint vocabulary has zero coverage") {
  const Vocabulary vocab = build_vocab({{"alpha", "beta"}}, 1);
  const EmbeddingTable t = build_matrix(vocab, random_vectors(3, 300, 1));
  CHECK(t.coverage == 0.0);
  CHECK_FALSE(EmbeddingTable::trainable);
}
