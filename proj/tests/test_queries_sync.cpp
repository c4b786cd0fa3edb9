#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "dscep/bench.hpp"
#include "dscep/query.hpp"

using namespace dscep;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(f), path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

// The CLI loads query files from queries/; the benchmark runners use the
// embedded copies. Both must parse to identical ASTs.
TEST_CASE("embedded benchmark queries match the files under queries/") {
  const auto& names = bench::query_names();
  REQUIRE(!names.empty());
  for (const auto& name : names) {
    CAPTURE(name);
    std::string file_text = read_file(std::string(DSCEP_SOURCE_DIR) + "/queries/" + name + ".rq");
    Query from_file = parse_query(file_text);
    Query embedded = parse_query(bench::query_text(name));
    CHECK(query_equal(from_file, embedded));
  }
}

TEST_CASE("embedded query texts survive a to_text round trip") {
  for (const auto& name : bench::query_names()) {
    CAPTURE(name);
    Query q = parse_query(bench::query_text(name));
    CHECK(query_equal(q, parse_query(to_text(q))));
  }
}

TEST_CASE("query_text rejects unknown names") {
  CHECK_THROWS_AS(bench::query_text("nope"), std::out_of_range);
}
