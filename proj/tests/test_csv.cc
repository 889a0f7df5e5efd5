#include <doctest.h>

#include <sstream>
#include <string>

#include "abusenet/csv.h"
#include "abusenet/error.h"

using namespace abusenet;

TEST_CASE("quoted fields with commas, quotes and newlines") {
  std::istringstream in("id,text\r\n1,\"a, \"\"quoted\"\"\nline\"\r\n2,plain\n");
  const CsvTable t = CsvTable::read_stream(in, "q.csv");
  REQUIRE(t.rows().size() == 2);
  CHECK(t.rows()[0].fields[1] == "a, \"quoted\"\nline");
  CHECK(t.rows()[1].fields[1] == "plain");
  CHECK(t.rows()[1].line == 4);
}

TEST_CASE("byte order mark and blank lines are skipped") {
  std::istringstream in("\xEF\xBB\xBFid,text\n\n1,x\n");
  const CsvTable t = CsvTable::read_stream(in, "bom.csv");
  CHECK(t.header()[0] == "id");
  CHECK(t.rows().size() == 1);
}

TEST_CASE("structural errors name file and line") {
  std::istringstream ragged("a,b\n1,2\n3\n");
  try {
    CsvTable::read_stream(ragged, "r.csv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("r.csv:3") != std::string::npos);
  }
  std::istringstream open_quote("a,b\n1,\"oops\n");
  CHECK_THROWS_AS(CsvTable::read_stream(open_quote, "u.csv"), ParseError);
  std::istringstream ok("a,b\n1,2\n");
  const CsvTable t = CsvTable::read_stream(ok, "ok.csv");
  CHECK_THROWS_AS(t.require_column("c"), SchemaError);
  CHECK(t.column("b") == 1u);
}

TEST_CASE("escaping round-trips through the reader") {
  std::ostringstream out;
  write_csv_row(out, {"id", "text"});
  write_csv_row(out, {"x", "comma, \"quote\"\nnewline"});
  write_csv_row(out, {"y", "plain"});
  CHECK(csv_escape("plain") == "plain");
  std::istringstream in(out.str());
  const CsvTable t = CsvTable::read_stream(in, "rt.csv");
  REQUIRE(t.rows().size() == 2);
  CHECK(t.rows()[0].fields[1] == "comma, \"quote\"\nnewline");
}
