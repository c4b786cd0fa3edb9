#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "dscep/engine.hpp"
#include "dscep/errors.hpp"
#include "dscep/ntriples.hpp"
#include "dscep/query.hpp"
#include "dscep/store.hpp"
#include "generators.hpp"
#include "naive_eval.hpp"
#include "oracles.hpp"

using namespace dscep;
using namespace dscep::testing;

namespace {

Window one_event_window(std::vector<Triple> triples, int64_t ts = 1000) {
  std::vector<TimestampedTriple> tts;
  for (auto& t : triples) tts.push_back({std::move(t), ts});
  return make_window(0, {make_graph_event("g0", std::move(tts))});
}

Term ex(const std::string& s) { return Term::iri("http://ex.test/" + s); }

}  // namespace

TEST_CASE("window_dataset scopes blanks per event and deduplicates") {
  GraphEvent e0 = make_graph_event(
      "g0", {{Triple{Term::blank("n"), ex("p"), Term::integer(1)}, 1},
             {Triple{ex("s"), ex("p"), ex("o")}, 1}});
  GraphEvent e1 = make_graph_event(
      "g1", {{Triple{Term::blank("n"), ex("p"), Term::integer(1)}, 2},
             {Triple{ex("s"), ex("p"), ex("o")}, 2}});
  auto data = window_dataset(make_window(0, {e0, e1}));
  REQUIRE(data.size() == 3);  // ground duplicate collapses, blanks stay apart
  CHECK(data[0].s == Term::blank("e0.n"));
  CHECK(data[2].s == Term::blank("e1.n"));
}

TEST_CASE("engine matches the naive evaluator on random instances") {
  Battery b = engine_oracle_battery(1001, 600);
  INFO(b.note);
  CHECK(b.cases == 600);
  CHECK(b.failures == 0);
}

TEST_CASE("engine is deterministic across repeated evaluation") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; i++) {
    RandomInstance inst = random_instance(rng);
    KbConfig cfg = instance_kb_config(inst, i % 2 == 0);
    Engine e(inst.q, cfg);
    WindowResult r1 = e.evaluate(inst.w);
    WindowResult r2 = e.evaluate(inst.w);
    CHECK(r1.solutions == r2.solutions);
    CHECK(r1.construct_groups == r2.construct_groups);
    CHECK(r1.kb_triples_touched == r2.kb_triples_touched);
  }
}

TEST_CASE("preloaded store and per-window reload agree") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 60; i++) {
    RandomInstance inst = random_instance(rng);
    if (inst.mode != KbMode::LocalMerge) continue;
    WindowResult a = evaluate_window(inst.q, inst.w, instance_kb_config(inst, false));
    WindowResult b = evaluate_window(inst.q, inst.w, instance_kb_config(inst, true));
    CHECK(a.solutions == b.solutions);
    CHECK(a.construct_groups == b.construct_groups);
  }
}

TEST_CASE("mode none never touches a kb") {
  Query q = parse_query("SELECT ?s WHERE { ?s <http://ex.test/p> ?o . }");
  Window w = one_event_window({{ex("s"), ex("p"), ex("o")}});
  WindowResult r = evaluate_window(q, w, KbConfig{});
  CHECK(r.kb_triples_touched == 0);
  REQUIRE(r.solutions.size() == 1);
}

TEST_CASE("aggregates over an empty match produce one global group") {
  Query q = parse_query(
      "SELECT (COUNT(?s) AS ?n) (AVG(?v) AS ?m) WHERE { ?s <http://ex.test/absent> ?v . }");
  Window w = one_event_window({{ex("s"), ex("p"), ex("o")}});
  WindowResult r = evaluate_window(q, w, KbConfig{});
  REQUIRE(r.solutions.size() == 1);
  CHECK(*r.solutions[0].get("n") == Term::integer(0));
  CHECK(r.solutions[0].get("m") == nullptr);  // AVG of nothing stays unbound
}

TEST_CASE("grouped construct drops groups with unbound template variables") {
  // ?x is only optionally bound; the template needs it
  Query q = parse_query(
      "CONSTRUCT { ?s <http://ex.test/out> ?x } WHERE {\n"
      "  ?s <http://ex.test/p> ?o .\n"
      "  OPTIONAL { ?s <http://ex.test/x> ?x . }\n"
      "}");
  Window w = one_event_window({
      {ex("s1"), ex("p"), ex("o")},
      {ex("s2"), ex("p"), ex("o")},
      {ex("s1"), ex("x"), Term::integer(4)},
  });
  WindowResult r = evaluate_window(q, w, KbConfig{});
  REQUIRE(r.construct_groups.size() == 1);
  CHECK(r.construct_groups[0][0] == Triple{ex("s1"), ex("out"), Term::integer(4)});
}

TEST_CASE("kb touches are recorded and sufficient") {
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 40) {
    RandomInstance inst = random_instance(rng);
    if (inst.mode != KbMode::LocalMerge) continue;
    checked++;
    auto store = std::make_shared<TripleStore>(TripleStore::from_triples(inst.kb));

    struct Rec : KbTouchRecorder {
      std::set<Triple> seen;
      void triple(const Triple& t) override { seen.insert(t); }
    } rec;
    KbConfig cfg;
    cfg.mode = KbMode::LocalMerge;
    cfg.store = store;
    cfg.reload_per_window = false;
    WindowResult full = evaluate_window(inst.q, inst.w, cfg, &rec);

    // every recorded triple exists in the store
    for (const auto& t : rec.seen) CHECK(store->contains(t));
    CHECK(full.kb_triples_touched >= rec.seen.size());

    // replaying against only the touched subset reproduces the results
    KbConfig sub;
    sub.mode = KbMode::LocalMerge;
    sub.store = std::make_shared<TripleStore>(
        TripleStore::from_triples({rec.seen.begin(), rec.seen.end()}));
    sub.reload_per_window = false;
    WindowResult again = evaluate_window(inst.q, inst.w, sub);
    CHECK(same_solutions(full.solutions, again.solutions));
    CHECK(same_groups(full.construct_groups, again.construct_groups));
  }
}

TEST_CASE("extract_used_kb reproduces full-store results on the sample") {
  std::mt19937_64 rng(33);
  int checked = 0;
  while (checked < 40) {
    RandomInstance inst = random_instance(rng);
    if (inst.mode != KbMode::LocalMerge) continue;
    checked++;
    TripleStore store = TripleStore::from_triples(inst.kb);
    std::vector<Window> sample{inst.w};
    std::vector<Triple> used = extract_used_kb(store, inst.q, sample);

    // subset of the store, in store order
    size_t pos = 0;
    const auto& all = store.triples();
    for (const auto& t : used) {
      while (pos < all.size() && !(all[pos] == t)) pos++;
      REQUIRE(pos < all.size());
      pos++;
    }

    KbConfig cfg;
    cfg.mode = KbMode::LocalMerge;
    cfg.store = std::make_shared<TripleStore>(TripleStore::from_triples(inst.kb));
    cfg.reload_per_window = false;
    WindowResult full = evaluate_window(inst.q, inst.w, cfg);

    KbConfig sub;
    sub.mode = KbMode::LocalMerge;
    sub.store = std::make_shared<TripleStore>(TripleStore::from_triples(used));
    sub.reload_per_window = false;
    WindowResult cut = evaluate_window(inst.q, inst.w, sub);

    CHECK(same_solutions(full.solutions, cut.solutions));
    CHECK(same_groups(full.construct_groups, cut.construct_groups));
  }
}

TEST_CASE("service touches are reported through the transport") {
  auto store = std::make_shared<TripleStore>(TripleStore::from_triples({
      {ex("e1"), ex("knows"), ex("e2")},
      {ex("e2"), ex("knows"), ex("e3")},
  }));
  Query q = parse_query(
      "SELECT ?a ?b WHERE { ?t <http://ex.test/m> ?a . SERVICE kb { ?a <http://ex.test/knows> "
      "?b . } }");
  KbConfig cfg;
  cfg.mode = KbMode::RemoteService;
  cfg.endpoints["kb"] = "inproc";
  cfg.transport = std::make_shared<InprocTransport>(store);
  Window w = one_event_window({{ex("t"), ex("m"), ex("e1")}});
  WindowResult r = evaluate_window(q, w, cfg);
  REQUIRE(r.solutions.size() == 1);
  CHECK(*r.solutions[0].get("b") == ex("e2"));
  CHECK(r.kb_triples_touched > 0);
}

TEST_CASE("engine construction validates mode combinations") {
  Query svc = parse_query("SELECT ?s WHERE { SERVICE kb { ?s <http://ex.test/p> ?o . } }");
  Query plain = parse_query("SELECT ?s WHERE { ?s <http://ex.test/p> ?o . }");

  CHECK_THROWS_AS(Engine(svc, KbConfig{}), ConfigError);  // SERVICE without remote mode

  KbConfig local;
  local.mode = KbMode::LocalMerge;
  CHECK_THROWS_AS(Engine(plain, local), ConfigError);  // no store, no text

  KbConfig remote;
  remote.mode = KbMode::RemoteService;
  CHECK_THROWS_AS(Engine(svc, remote), ConfigError);  // no transport

  KbConfig wrong_endpoint;
  wrong_endpoint.mode = KbMode::RemoteService;
  wrong_endpoint.transport = std::make_shared<InprocTransport>(
      std::make_shared<TripleStore>(TripleStore::from_triples({})));
  wrong_endpoint.endpoints["other"] = "x";
  CHECK_THROWS_AS(Engine(svc, wrong_endpoint), ConfigError);  // endpoint unresolved

  KbConfig reload_without_text;
  reload_without_text.mode = KbMode::LocalMerge;
  reload_without_text.store = std::make_shared<TripleStore>(TripleStore::from_triples({}));
  reload_without_text.reload_per_window = true;
  CHECK_THROWS_AS(Engine(plain, reload_without_text), ConfigError);
}
