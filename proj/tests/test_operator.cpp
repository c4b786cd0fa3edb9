#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "dscep/broker_net.hpp"
#include "dscep/bus.hpp"
#include "dscep/engine.hpp"
#include "dscep/errors.hpp"
#include "dscep/kb_service.hpp"
#include "dscep/operator.hpp"
#include "dscep/query.hpp"
#include "dscep/replay.hpp"
#include "dscep/store.hpp"
#include "dscep/window.hpp"
#include "generators.hpp"

using namespace dscep;

namespace {

Term ex(const std::string& s) { return Term::iri("http://ex.test/" + s); }

// n simple user/value events, ids cycle over 4 users, ts rises by 10.
std::vector<GraphEvent> sample_events(int n) {
  std::vector<GraphEvent> out;
  for (int i = 0; i < n; i++) {
    int64_t ts = 1000 + 10 * i;
    Term user = ex("u" + std::to_string(i % 4));
    std::vector<TimestampedTriple> tts{
        {Triple{ex("e" + std::to_string(i)), ex("by"), user}, ts},
        {Triple{ex("e" + std::to_string(i)), ex("score"), Term::integer(i % 7)}, ts},
    };
    out.push_back(make_graph_event("g" + std::to_string(i), std::move(tts)));
  }
  return out;
}

const char* kDeriveQuery =
    "CONSTRUCT { ?e <http://ex.test/hit> ?u } WHERE {\n"
    "  ?e <http://ex.test/by> ?u .\n"
    "  ?e <http://ex.test/score> ?v .\n"
    "  FILTER(?v >= 2)\n"
    "}";

// Expected output triple sequence: windows in seq order, groups in engine
// emission order, triples in template order.
std::vector<Triple> direct_derive(const std::vector<GraphEvent>& events, const WindowConfig& cfg,
                                  const Query& q, const KbConfig& kb) {
  std::vector<Triple> out;
  for (const auto& w : cut_windows(events, cfg)) {
    WindowResult r = evaluate_window(q, w, kb);
    for (const auto& g : r.construct_groups)
      for (const auto& t : g) out.push_back(t);
  }
  return out;
}

OperatorSpec derive_spec(const std::string& in, const std::string& out, int engines) {
  OperatorSpec spec;
  spec.id = "op-" + out;
  spec.inputs = {in};
  spec.output = out;
  spec.window.kind = WindowKind::Count;
  spec.window.max_triples = 6;  // 3 events per window
  spec.engine_count = engines;
  spec.query = parse_query(kDeriveQuery);
  return spec;
}

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = "/tmp/dscep_optest_" + name;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  return path;
}

// ConfigError message substring, or "(no throw)".
std::string config_error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "(no throw)";
}

}  // namespace

TEST_CASE("operator output equals direct window evaluation") {
  auto events = sample_events(30);
  OperatorSpec spec = derive_spec("in", "out", 1);
  auto metrics = std::make_shared<CollectingMetricsSink>();
  spec.metrics = metrics;
  std::vector<Triple> want = direct_derive(events, spec.window, spec.query, spec.kb);
  REQUIRE(!want.empty());

  LocalBroker bus;
  OperatorHandle op = start_operator(bus, spec);
  bus.ensure_group("out", "client");
  replay_events(bus, "in", events, 0);

  WindowConfig client_cfg;
  client_cfg.max_triples = 100000;
  ClientResult got = run_client(bus, {"out"}, "client", client_cfg);
  op.join();
  REQUIRE_FALSE(op.failed());
  CHECK(got.triples == want);

  // one metrics row per window, dense seqs, sizes match the cutter
  auto windows = cut_windows(events, spec.window);
  auto rows = metrics->rows();
  REQUIRE(rows.size() == windows.size());
  std::sort(rows.begin(), rows.end(),
            [](const MetricsRow& a, const MetricsRow& b) { return a.window_seq < b.window_seq; });
  for (size_t i = 0; i < rows.size(); i++) {
    CHECK(rows[i].window_seq == i);
    CHECK(rows[i].triples == windows[i].triple_count);
    CHECK(rows[i].operator_id == spec.id);
    CHECK(rows[i].engine_id == 0);
    CHECK(rows[i].eval_millis >= 0);
  }
}

TEST_CASE("engine pool size does not change the output sequence") {
  auto events = sample_events(60);
  std::vector<std::vector<Triple>> outs;
  for (int engines : {1, 2, 4}) {
    LocalBroker bus;
    OperatorSpec spec = derive_spec("in", "out", engines);
    auto metrics = std::make_shared<CollectingMetricsSink>();
    spec.metrics = metrics;
    OperatorHandle op = start_operator(bus, spec);
    bus.ensure_group("out", "client");
    replay_events(bus, "in", events, 0);
    WindowConfig client_cfg;
    client_cfg.max_triples = 100000;
    ClientResult got = run_client(bus, {"out"}, "client", client_cfg);
    op.join();
    REQUIRE_FALSE(op.failed());
    outs.push_back(got.triples);

    auto rows = metrics->rows();
    for (const auto& r : rows) {
      CHECK(r.engine_id >= 0);
      CHECK(r.engine_id < engines);
    }
  }
  CHECK(outs[0] == outs[1]);
  CHECK(outs[0] == outs[2]);
}

TEST_CASE("eos flows through a two-operator chain") {
  auto events = sample_events(24);
  OperatorSpec first = derive_spec("in", "mid", 2);
  // second stage matches the derived triples
  OperatorSpec second;
  second.id = "tail";
  second.inputs = {"mid"};
  second.output = "out";
  second.window.kind = WindowKind::Count;
  second.window.max_triples = 4;
  second.query = parse_query(
      "CONSTRUCT { ?u <http://ex.test/seen> ?e } WHERE { ?e <http://ex.test/hit> ?u . }");

  // direct two-stage expectation: stage-1 groups become stage-2 input events
  std::vector<GraphEvent> mid_events;
  for (const auto& w : cut_windows(events, first.window)) {
    WindowResult r = evaluate_window(first.query, w, first.kb);
    for (const auto& g : r.construct_groups) {
      std::vector<TimestampedTriple> tts;
      for (const auto& t : g) tts.push_back({t, w.high_ts});
      mid_events.push_back(make_graph_event("x", std::move(tts)));
    }
  }
  std::vector<Triple> want = direct_derive(mid_events, second.window, second.query, second.kb);
  REQUIRE(!want.empty());

  LocalBroker bus;
  OperatorHandle op1 = start_operator(bus, first);
  OperatorHandle op2 = start_operator(bus, second);
  bus.ensure_group("out", "client");
  replay_events(bus, "in", events, 0);
  WindowConfig client_cfg;
  client_cfg.max_triples = 100000;
  ClientResult got = run_client(bus, {"out"}, "client", client_cfg);
  op1.join();
  op2.join();
  REQUIRE_FALSE(op1.failed());
  REQUIRE_FALSE(op2.failed());
  CHECK(got.triples == want);
}

TEST_CASE("kb-backed operator over sockets matches the local path") {
  auto kb_triples = std::vector<Triple>{
      {ex("u0"), ex("team"), ex("red")},
      {ex("u1"), ex("team"), ex("blue")},
      {ex("u2"), ex("team"), ex("red")},
  };
  auto store = std::make_shared<TripleStore>(TripleStore::from_triples(kb_triples));
  Query q = parse_query(
      "CONSTRUCT { ?e <http://ex.test/team> ?t } WHERE {\n"
      "  ?e <http://ex.test/by> ?u .\n"
      "  SERVICE kb { ?u <http://ex.test/team> ?t . }\n"
      "}");
  auto events = sample_events(12);

  // expectation from an in-process transport
  OperatorSpec spec;
  spec.id = "teams";
  spec.inputs = {"in"};
  spec.output = "out";
  spec.window.max_triples = 6;
  spec.query = q;
  spec.kb.mode = KbMode::RemoteService;
  spec.kb.endpoints["kb"] = "inproc";
  spec.kb.transport = std::make_shared<dscep::testing::InprocTransport>(store);
  std::vector<Triple> want = direct_derive(events, spec.window, q, spec.kb);
  REQUIRE(!want.empty());

  KbService kb_srv(store, "127.0.0.1:0");
  LocalBroker broker;
  BrokerServer broker_srv(broker, "127.0.0.1:0");
  RemoteBus bus(broker_srv.address());

  spec.kb.endpoints["kb"] = kb_srv.address();
  spec.kb.transport = std::make_shared<SocketServiceTransport>(spec.kb.endpoints);
  OperatorHandle op = start_operator(bus, spec);
  bus.ensure_group("out", "client");
  replay_events(bus, "in", events, 0);
  WindowConfig client_cfg;
  client_cfg.max_triples = 100000;
  ClientResult got = run_client(bus, {"out"}, "client", client_cfg);
  op.join();
  REQUIRE_FALSE(op.failed());
  CHECK(got.triples == want);
  kb_srv.stop();
  broker_srv.stop();
}

TEST_CASE("unreachable service endpoint fails the operator") {
  OperatorSpec spec;
  spec.id = "doomed";
  spec.inputs = {"in"};
  spec.output = "out";
  spec.window.max_triples = 6;
  spec.query = parse_query(
      "CONSTRUCT { ?u <http://ex.test/t> ?t } WHERE {\n"
      "  ?e <http://ex.test/by> ?u .\n"
      "  SERVICE kb { ?u <http://ex.test/team> ?t . }\n"
      "}");
  spec.kb.mode = KbMode::RemoteService;
  spec.kb.endpoints["kb"] = "127.0.0.1:1";  // nothing listens there
  spec.kb.transport = std::make_shared<SocketServiceTransport>(spec.kb.endpoints);

  LocalBroker bus;
  OperatorHandle op = start_operator(bus, spec);
  replay_events(bus, "in", sample_events(6), 0);
  op.join();
  CHECK(op.failed());
  CHECK(op.error().find("doomed") != std::string::npos);
}

TEST_CASE("spec validation rejects bad shapes") {
  LocalBroker bus;
  OperatorSpec spec = derive_spec("in", "out", 1);

  OperatorSpec s1 = spec;
  s1.query = parse_query("SELECT ?e WHERE { ?e <http://ex.test/by> ?u . }");
  CHECK_THROWS_AS(start_operator(bus, s1), ConfigError);

  OperatorSpec s2 = spec;
  s2.inputs = {"a", "a"};
  CHECK_THROWS_AS(start_operator(bus, s2), ConfigError);

  OperatorSpec s3 = spec;
  s3.output = "in";
  CHECK_THROWS_AS(start_operator(bus, s3), ConfigError);

  OperatorSpec s4 = spec;
  s4.engine_count = 0;
  CHECK_THROWS_AS(start_operator(bus, s4), ConfigError);

  OperatorSpec s5 = spec;
  s5.id = "has space";
  CHECK_THROWS_AS(start_operator(bus, s5), ConfigError);
}

TEST_CASE("operator properties files parse and validate") {
  std::string qpath = write_temp("q.rq", kDeriveQuery);
  std::string kbpath = write_temp("kb.nt",
                                  "<http://ex.test/u0> <http://ex.test/team> "
                                  "<http://ex.test/red> .\n");

  std::string good = write_temp("good.properties",
                                "# derive operator\n"
                                "id=derive\n"
                                "topics=in1, in2\n"
                                "output=out\n"
                                "window.kind=count\n"
                                "window.max_triples=12\n"
                                "engines=3\n"
                                "query.file=" + qpath + "\n"
                                "kb.mode=local\n"
                                "kb.file=" + kbpath + "\n"
                                "kb.reload=false\n");
  OperatorSpec spec = load_operator_spec(good);
  CHECK(spec.id == "derive");
  CHECK(spec.inputs == std::vector<std::string>{"in1", "in2"});
  CHECK(spec.output == "out");
  CHECK(spec.window.kind == WindowKind::Count);
  CHECK(spec.window.max_triples == 12);
  CHECK(spec.engine_count == 3);
  CHECK(spec.kb.mode == KbMode::LocalMerge);
  CHECK_FALSE(spec.kb.reload_per_window);
  REQUIRE(spec.kb.kb_text != nullptr);
  CHECK(spec.kb.kb_text->find("http://ex.test/u0") != std::string::npos);
  CHECK(query_equal(spec.query, parse_query(kDeriveQuery)));

  std::string unknown = write_temp("unknown.properties",
                                   "id=x\ntopics=in\noutput=out\nquery.file=" + qpath +
                                       "\nbogus=1\n");
  CHECK(config_error_of([&] { load_operator_spec(unknown); }).find("unknown key: bogus") !=
        std::string::npos);

  std::string missing =
      write_temp("missing.properties", "id=x\ntopics=in\nquery.file=" + qpath + "\n");
  CHECK(config_error_of([&] { load_operator_spec(missing); })
            .find("missing required key: output") != std::string::npos);

  std::string bad_ep = write_temp("badep.properties",
                                  "id=x\ntopics=in\noutput=out\nquery.file=" + qpath +
                                      "\nkb.mode=service\nkb.endpoint=nohostport\n");
  CHECK_THROWS_AS(load_operator_spec(bad_ep), ConfigError);

  std::string svc = write_temp("svc.properties",
                               "id=x\ntopics=in\noutput=out\nquery.file=" + qpath +
                                   "\nkb.mode=service\nkb.endpoint=kb=127.0.0.1:7777\n");
  OperatorSpec sspec = load_operator_spec(svc);
  CHECK(sspec.kb.mode == KbMode::RemoteService);
  CHECK(sspec.kb.endpoints.at("kb") == "127.0.0.1:7777");
  CHECK(sspec.kb.transport != nullptr);
}
