#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "dscep/errors.hpp"
#include "dscep/ntriples.hpp"
#include "dscep/rdf.hpp"
#include "dscep/wire.hpp"

using namespace dscep;

TEST_CASE("term factories and classification") {
  Term i = Term::iri("http://a/b");
  Term b = Term::blank("x1");
  Term l = Term::literal("hi");
  CHECK(i.is_iri());
  CHECK(b.is_blank());
  CHECK(l.is_literal());
  CHECK_FALSE(l.is_numeric());

  CHECK(Term::integer(-7) == Term::typed("-7", xsd::integer_iri));
  CHECK(Term::integer(3).is_numeric());
  CHECK(Term::number(2.5).is_numeric());
  CHECK(*Term::number(2.5).numeric_value() == 2.5);
  CHECK(*Term::integer(42).numeric_value() == 42.0);
}

TEST_CASE("explicit xsd:string normalizes away") {
  CHECK(Term::literal("a", xsd::string_iri) == Term::literal("a"));
  CHECK(Term::literal("a").effective_datatype() == xsd::string_iri);
  CHECK(Term::literal("a", xsd::string_iri).datatype.empty());
}

TEST_CASE("numeric edge cases") {
  CHECK_FALSE(Term::typed("abc", xsd::integer_iri).numeric_value().has_value());
  CHECK_FALSE(Term::literal("3").is_numeric());            // plain string
  CHECK_FALSE(Term::literal("3", "", "en").is_numeric());  // lang-tagged
  CHECK(Term::typed("3.25", xsd::decimal_iri).is_numeric());
  CHECK(*Term::typed("3.25", xsd::decimal_iri).numeric_value() == doctest::Approx(3.25));
  CHECK(Term::typed("5", xsd::long_iri).is_numeric());
}

TEST_CASE("term ordering: iri < blank < literal, then fields") {
  CHECK(Term::iri("z") < Term::blank("a"));
  CHECK(Term::blank("z") < Term::literal("a"));
  CHECK(Term::iri("a") < Term::iri("b"));
  CHECK(Term::literal("a") < Term::literal("a", xsd::integer_iri));
}

TEST_CASE("graph events derive event_ts and reject bad input") {
  std::vector<TimestampedTriple> tts{
      {Triple{Term::iri("s"), Term::iri("p"), Term::iri("o")}, 5},
      {Triple{Term::iri("s"), Term::iri("p"), Term::integer(1)}, 9},
      {Triple{Term::iri("s"), Term::iri("p"), Term::integer(2)}, 7},
  };
  GraphEvent ev = make_graph_event("g1", tts);
  CHECK(ev.event_ts == 9);
  CHECK(ev.triple_count() == 3);

  CHECK_THROWS_AS(make_graph_event("g", {}), std::invalid_argument);
  CHECK_THROWS_AS(
      make_graph_event("g", {{Triple{Term::iri("s"), Term::iri("p"), Term::iri("o")}, -1}}),
      std::invalid_argument);

  Event as_triple = tts[0];
  Event as_graph = ev;
  CHECK(event_ts(as_triple) == 5);
  CHECK(event_ts(as_graph) == 9);
  CHECK(event_triple_count(as_triple) == 1);
  CHECK(event_triple_count(as_graph) == 3);
}

TEST_CASE("hashes agree with equality") {
  Term a = Term::literal("x", xsd::integer_iri);
  Term b = Term::typed("x", xsd::integer_iri);
  CHECK(a == b);
  CHECK(hash_term(a) == hash_term(b));
  Triple t1{Term::iri("s"), Term::iri("p"), a};
  Triple t2{Term::iri("s"), Term::iri("p"), b};
  CHECK(hash_triple(t1) == hash_triple(t2));
}

TEST_CASE("ntriples round trip covers escapes and term forms") {
  std::vector<Triple> triples{
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::iri("http://ex/o")},
      {Term::blank("b0"), Term::iri("http://ex/p"), Term::blank("b1")},
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::literal("line\nbreak\t\"q\"\\")},
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::literal("héllo – ünïcode")},
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::literal("chat", "", "en")},
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::integer(-12)},
      {Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::number(0.125)},
  };
  for (const auto& t : triples) {
    CHECK(parse_ntriple(serialize_ntriple(t)) == t);
  }
  std::string text = serialize_ntriples(triples);
  CHECK(parse_ntriples(text) == triples);
}

TEST_CASE("ntriples accepts comments, blank lines and escape sequences") {
  auto triples = parse_ntriples("# c\n\n<http://ex/s> <http://ex/p> \"\\u0041\" .\n");
  REQUIRE(triples.size() == 1);
  CHECK(triples[0].o == Term::literal("A"));

  auto smiley = parse_ntriple("<http://ex/s> <http://ex/p> \"\\U0001F600\" .");
  CHECK(smiley.o == Term::literal("\xF0\x9F\x98\x80"));
  CHECK(parse_ntriple(serialize_ntriple(smiley)) == smiley);
}

TEST_CASE("ntriples reports parse errors with positions") {
  CHECK_THROWS_AS(parse_ntriple("<http://ex/s> <http://ex/p> ."), NtParseError);
  CHECK_THROWS_AS(parse_ntriple("nonsense"), NtParseError);
  CHECK_THROWS_AS(parse_ntriple("<http://ex/s> <http://ex/p> \"open"), NtParseError);
  CHECK_THROWS_AS(parse_ntriple("<http://ex/s> <http://ex/p> <http://ex/o>"), NtParseError);

  try {
    parse_ntriples("<http://ex/s> <http://ex/p> <http://ex/o> .\nbad line\n");
    FAIL("expected NtParseError");
  } catch (const NtParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("wire round trip for triple and graph events") {
  TimestampedTriple tt{
      Triple{Term::blank("n"), Term::iri("http://ex/p"), Term::literal("v", "", "de")}, 44};
  Event ev1 = tt;
  CHECK(decode_event(encode_event(ev1)) == ev1);

  GraphEvent g = make_graph_event(
      "tweet:1", {{Triple{Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::integer(2)}, 7},
                  {Triple{Term::blank("x"), Term::iri("http://ex/q"), Term::number(1.5)}, 9}});
  Event ev2 = g;
  CHECK(decode_event(encode_event(ev2)) == ev2);
}

TEST_CASE("wire decode validates required fields and event_ts") {
  CHECK_THROWS_AS(decode_event("{\"p\":{\"k\":\"iri\",\"v\":\"x\"}}"), DecodeError);
  try {
    decode_event("{\"s\":{\"k\":\"iri\",\"v\":\"a\"},\"p\":{\"k\":\"iri\",\"v\":\"b\"},"
                 "\"o\":{\"k\":\"iri\",\"v\":\"c\"}}");
    FAIL("expected DecodeError");
  } catch (const DecodeError& e) {
    CHECK(e.field == "ts");
  }

  // carried ets must equal the max member ts
  GraphEvent g = make_graph_event(
      "g", {{Triple{Term::iri("http://ex/s"), Term::iri("http://ex/p"), Term::integer(1)}, 5}});
  std::string enc = encode_event(Event{g});
  auto pos = enc.find("\"ets\":5");
  REQUIRE(pos != std::string::npos);
  std::string bad = enc;
  bad.replace(pos, 7, "\"ets\":6");
  CHECK_THROWS_AS(decode_event(bad), DecodeError);

  // unknown fields are ignored
  std::string extra = enc;
  extra.insert(extra.size() - 1, ",\"debug\":true");
  CHECK(decode_event(extra) == Event{g});
}

TEST_CASE("eos marker") {
  CHECK(is_eos_payload(kEosPayload));
  CHECK_FALSE(is_eos_payload("{}"));
  CHECK_FALSE(is_eos_payload("{\"op\":\"data\"}"));
  CHECK_FALSE(is_eos_payload("not json"));
}

TEST_CASE("random terms survive both serializations") {
  std::mt19937_64 rng(7);
  auto rand_string = [&] {
    std::string s;
    int n = int(rng() % 12);
    for (int i = 0; i < n; i++) {
      int c = int(rng() % 96) + 32;  // printable ascii incl. quotes/backslash
      s.push_back(char(c));
    }
    return s;
  };
  for (int i = 0; i < 500; i++) {
    Term t;
    switch (rng() % 4) {
      case 0: t = Term::iri("http://ex/" + std::to_string(rng() % 1000)); break;
      case 1: t = Term::blank("b" + std::to_string(rng() % 50)); break;
      case 2: t = Term::literal(rand_string()); break;
      default:
        t = rng() % 2 ? Term::integer(int64_t(rng() % 2000) - 1000)
                      : Term::literal(rand_string(), "", "en");
    }
    Triple tr{Term::iri("http://ex/s"), Term::iri("http://ex/p"), t};
    CHECK(parse_ntriple(serialize_ntriple(tr)) == tr);
    Event ev = TimestampedTriple{tr, int64_t(rng() % 100000)};
    CHECK(decode_event(encode_event(ev)) == ev);
  }
}
