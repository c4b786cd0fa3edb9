#include "dscep/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <thread>

#include "dscep/engine.hpp"
#include "dscep/errors.hpp"
#include "dscep/kb_service.hpp"
#include "dscep/ntriples.hpp"
#include "dscep/query.hpp"
#include "dscep/replay.hpp"
#include "dscep/wire.hpp"

namespace dscep {
namespace bench {

namespace {

const char* kPrefixes =
    "PREFIX voc: <http://example.org/scep/voc#>\n"
    "PREFIX out: <http://example.org/scep/out#>\n"
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\n";

// The continuous queries, written once here and mirrored under queries/.
// q15/q16: class-tree membership and the birthplace chain, in both KB access
// modes. cquery1: artist/show co-mention sentiment, once monolithic and once
// decomposed into the seven-operator graph A..G.
const std::map<std::string, std::string>& query_table() {
  static const std::map<std::string, std::string> table = [] {
    std::map<std::string, std::string> t;
    auto add = [&](const char* name, const char* body) {
      t[name] = std::string(kPrefixes) + body;
    };

    add("q15-local",
        "CONSTRUCT { ?t out:mentionsArtist ?e }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?e .\n"
        "  ?e rdf:type/rdfs:subClassOf* voc:MusicalArtist .\n"
        "}\n");
    add("q15-service",
        "CONSTRUCT { ?t out:mentionsArtist ?e }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?e .\n"
        "  SERVICE kb { ?e rdf:type/rdfs:subClassOf* voc:MusicalArtist . }\n"
        "}\n");

    add("q16-local",
        "CONSTRUCT { ?t out:artistPlace ?bp . ?t out:artistCountry ?c . ?t out:artistCode ?cc }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?e .\n"
        "  ?e rdf:type/rdfs:subClassOf* voc:MusicalArtist .\n"
        "  ?e voc:birthPlace ?bp .\n"
        "  ?bp voc:country ?c .\n"
        "  ?e voc:birthPlace/voc:country/voc:countryCode ?cc .\n"
        "}\n");
    add("q16-service",
        "CONSTRUCT { ?t out:artistPlace ?bp . ?t out:artistCountry ?c . ?t out:artistCode ?cc }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?e .\n"
        "  SERVICE kb {\n"
        "    ?e rdf:type/rdfs:subClassOf* voc:MusicalArtist .\n"
        "    ?e voc:birthPlace ?bp .\n"
        "    ?bp voc:country ?c .\n"
        "    ?e voc:birthPlace/voc:country/voc:countryCode ?cc .\n"
        "  }\n"
        "}\n");

    add("cquery1-mono",
        "CONSTRUCT { ?a out:coMentionShow ?s . ?a out:coMentionCount ?c . "
        "?a out:meanPositivity ?m }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?a .\n"
        "  ?a rdf:type/rdfs:subClassOf* voc:MusicalArtist .\n"
        "  ?t voc:mentions ?s .\n"
        "  ?s rdf:type/rdfs:subClassOf* voc:TelevisionShow .\n"
        "  OPTIONAL { ?t voc:retweetOf ?r . }\n"
        "  { ?t voc:hasSentimentPos ?p . ?t voc:hasSentimentNeg ?n .\n"
        "    voc:posFlag voc:flagValue ?f . FILTER(?p > ?n) }\n"
        "  UNION\n"
        "  { ?t voc:hasSentimentPos ?p . ?t voc:hasSentimentNeg ?n .\n"
        "    voc:negFlag voc:flagValue ?f . FILTER(?p <= ?n) }\n"
        "}\n"
        "GROUP BY ?a ?s (COUNT(?t) AS ?c) (AVG(?f) AS ?m)\n");

    add("cquery1-a",
        "CONSTRUCT { ?t out:artistHit ?a . ?t out:posScore ?p . ?t out:negScore ?n }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?a .\n"
        "  ?a rdf:type/rdfs:subClassOf* voc:MusicalArtist .\n"
        "  ?t voc:hasSentimentPos ?p .\n"
        "  ?t voc:hasSentimentNeg ?n .\n"
        "}\n");
    add("cquery1-b",
        "CONSTRUCT { ?t out:showHit ?s . ?t out:posScoreS ?p . ?t out:negScoreS ?n }\n"
        "WHERE {\n"
        "  ?t voc:mentions ?s .\n"
        "  ?s rdf:type/rdfs:subClassOf* voc:TelevisionShow .\n"
        "  ?t voc:hasSentimentPos ?p .\n"
        "  ?t voc:hasSentimentNeg ?n .\n"
        "}\n");
    add("cquery1-c",
        "CONSTRUCT { ?t out:artistMention ?a . ?t out:artistPositivity 1.0 }\n"
        "WHERE {\n"
        "  ?t out:artistHit ?a .\n"
        "  ?t out:posScore ?p .\n"
        "  ?t out:negScore ?n .\n"
        "  FILTER(?p > ?n)\n"
        "}\n");
    add("cquery1-d",
        "CONSTRUCT { ?t out:artistMention ?a . ?t out:artistPositivity 0.0 }\n"
        "WHERE {\n"
        "  ?t out:artistHit ?a .\n"
        "  ?t out:posScore ?p .\n"
        "  ?t out:negScore ?n .\n"
        "  FILTER(?p <= ?n)\n"
        "}\n");
    add("cquery1-e",
        "CONSTRUCT { ?t out:showMentionP ?s }\n"
        "WHERE {\n"
        "  ?t out:showHit ?s .\n"
        "  ?t out:posScoreS ?p .\n"
        "  ?t out:negScoreS ?n .\n"
        "  FILTER(?p > ?n)\n"
        "}\n");
    add("cquery1-f",
        "CONSTRUCT { ?t out:showMentionN ?s }\n"
        "WHERE {\n"
        "  ?t out:showHit ?s .\n"
        "  ?t out:posScoreS ?p .\n"
        "  ?t out:negScoreS ?n .\n"
        "  FILTER(?p <= ?n)\n"
        "}\n");
    add("cquery1-g",
        "CONSTRUCT { ?a out:coMentionShow ?s . ?a out:coMentionCount ?c . "
        "?a out:meanPositivity ?m }\n"
        "WHERE {\n"
        "  ?t out:artistMention ?a .\n"
        "  ?t out:artistPositivity ?f .\n"
        "  { ?t out:showMentionP ?s . } UNION { ?t out:showMentionN ?s . }\n"
        "}\n"
        "GROUP BY ?a ?s (COUNT(?t) AS ?c) (AVG(?f) AS ?m)\n");

    return t;
  }();
  return table;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  if (n == 0) return 0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::shared_ptr<const TripleStore> canonical_kb(const GenConfig& g) {
  return std::make_shared<const TripleStore>(
      TripleStore::from_triples(generate_kb_triples(g), true));
}

}  // namespace

std::string content_digest(const std::vector<Triple>& triples) {
  std::vector<std::string> lines;
  lines.reserve(triples.size());
  for (const auto& t : triples) lines.push_back(serialize_ntriple(t));
  std::sort(lines.begin(), lines.end());
  uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& line : lines) {
    for (unsigned char c : line) mix(c);
    mix('\n');
  }
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& query_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, _] : query_table()) n.push_back(name);
    return n;
  }();
  return names;
}

const std::string& query_text(const std::string& name) { return query_table().at(name); }

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write report file: " + path);
  out << "step,pipeline," << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.pipeline << ',' << r.m.operator_id << ',' << r.m.window_seq << ','
        << r.m.triples << ',' << r.m.eval_millis << ',' << r.m.kb_triples_touched << ','
        << r.m.engine_id << "\n";
  }
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write summary file: " + path);
  out << "step,pipeline,wall_millis,digest\n";
  for (const auto& r : rows)
    out << r.step << ',' << r.pipeline << ',' << r.wall_millis << ',' << r.digest << "\n";
}

GenConfig step1_config(uint64_t seed) {
  GenConfig g;
  g.seed = seed;
  g.tweet_count = 600;
  return g;
}

GenConfig step2_config(uint64_t seed) {
  GenConfig g;
  g.seed = seed;
  g.tweet_count = 1000;
  // A KB several times larger than what any one query touches: deeper class
  // trees and entity pools sized so much of it serves other queries
  // (birthplace chains, unmentioned entities). The decomposition's gain comes
  // from each subquery operator carrying only its own KB part.
  g.artists = 3500;
  g.shows = 2000;
  g.others = 1500;
  g.artist_depth = 5;
  g.artist_fanout = 6;
  g.show_depth = 4;
  g.show_fanout = 9;
  g.places = 500;
  g.countries = 80;
  return g;
}

GenConfig step3_config(uint64_t seed) {
  GenConfig g;
  g.seed = seed;
  g.tweet_count = 1000;
  return g;
}

PipelineOutcome run_pipeline(const std::vector<PipelineOp>& ops, const PipelineEnv& env,
                             const std::vector<GraphEvent>& events) {
  LocalBroker bus;

  std::unique_ptr<KbService> service;
  std::map<std::string, std::string> endpoints;
  for (const auto& op : ops) {
    if (op.kb == KbMode::LocalMerge && !env.kb && !env.kb_texts.count(op.id))
      throw ConfigError("pipeline uses local KB merge but no KB store was given");
    if (op.kb == KbMode::RemoteService && !service) {
      if (!env.kb) throw ConfigError("pipeline uses a KB service but no KB store was given");
      service = std::make_unique<KbService>(env.kb, "127.0.0.1:0");
      endpoints["kb"] = service->address();
    }
  }

  auto metrics = std::make_shared<CollectingMetricsSink>();
  std::vector<OperatorHandle> handles;
  handles.reserve(ops.size());
  for (const auto& op : ops) {
    OperatorSpec spec;
    spec.id = op.id;
    spec.inputs = op.inputs;
    spec.output = op.output;
    spec.window = op.window;
    spec.engine_count = op.engines;
    spec.query = parse_query(query_text(op.query));
    spec.kb.mode = op.kb;
    if (op.kb == KbMode::LocalMerge) {
      auto it = env.kb_texts.find(op.id);
      if (it != env.kb_texts.end()) {
        spec.kb.kb_text = it->second;
        spec.kb.reload_per_window = true;
      } else {
        spec.kb.store = env.kb;
        spec.kb.reload_per_window = false;
      }
    } else if (op.kb == KbMode::RemoteService) {
      spec.kb.endpoints = endpoints;
      spec.kb.transport = std::make_shared<SocketServiceTransport>(endpoints);
    }
    spec.metrics = metrics;
    handles.push_back(start_operator(bus, spec));
  }

  // The client group must exist before replay starts or early results on the
  // sink would be missed (groups only see messages published after they are
  // registered).
  const std::string client_group = "bench-client";
  bus.ensure_group(env.sink, client_group);

  ClientResult client;
  std::exception_ptr client_err;
  std::chrono::steady_clock::time_point client_done;
  WindowConfig client_window;  // one huge count window; only content matters
  client_window.kind = WindowKind::Count;
  client_window.max_triples = std::numeric_limits<size_t>::max() / 2;
  std::thread client_thread([&] {
    try {
      client = run_client(bus, {env.sink}, client_group, client_window);
    } catch (...) {
      client_err = std::current_exception();
    }
    client_done = std::chrono::steady_clock::now();
  });

  auto t0 = std::chrono::steady_clock::now();
  replay_events(bus, env.source, events, env.replay_rate, /*publish_eos=*/true);

  for (auto& h : handles) h.join();
  std::string op_error;
  for (auto& h : handles)
    if (h.failed() && op_error.empty()) op_error = h.error();
  // A failed operator may never publish EOS on the sink; release the client
  // before surfacing the error.
  if (!op_error.empty()) bus.publish(env.sink, kEosPayload);
  client_thread.join();
  if (!op_error.empty()) throw BusError(op_error);
  if (client_err) std::rethrow_exception(client_err);

  PipelineOutcome out;
  out.wall_millis = std::chrono::duration<double, std::milli>(client_done - t0).count();
  out.digest = content_digest(client.triples);
  out.result_triples = client.triples.size();
  out.client_windows = client.rows.size();
  out.metrics = metrics->rows();
  return out;
}

std::vector<PipelineOp> q15_pipeline(KbMode mode, int engines) {
  PipelineOp op;
  op.id = "q15";
  op.inputs = {"t1"};
  op.output = "out";
  op.window.kind = WindowKind::Count;
  op.window.max_triples = 1000;
  op.engines = engines;
  op.query = mode == KbMode::RemoteService ? "q15-service" : "q15-local";
  op.kb = mode;
  return {op};
}

std::vector<PipelineOp> q16_pipeline(KbMode mode) {
  PipelineOp op;
  op.id = "q16";
  op.inputs = {"t1"};
  op.output = "out";
  op.window.kind = WindowKind::Count;
  op.window.max_triples = 1000;
  op.query = mode == KbMode::RemoteService ? "q16-service" : "q16-local";
  op.kb = mode;
  return {op};
}

std::vector<PipelineOp> cquery1_mono_pipeline() {
  PipelineOp op;
  op.id = "mono";
  op.inputs = {"t1"};
  op.output = "out";
  op.window.kind = WindowKind::Count;
  op.window.max_triples = 1000;
  op.query = "cquery1-mono";
  op.kb = KbMode::LocalMerge;
  return {op};
}

std::vector<PipelineOp> cquery1_dag_pipeline() {
  auto kb_op = [](const char* id, const char* query, const char* out) {
    PipelineOp op;
    op.id = id;
    op.inputs = {"t1"};
    op.output = out;
    op.window.kind = WindowKind::Count;
    op.window.max_triples = 1000;
    op.query = query;
    op.kb = KbMode::LocalMerge;
    return op;
  };
  // Derived events carry their source window's high_ts, so width-1 buckets
  // re-window them exactly by source window.
  auto stream_op = [](const char* id, const char* query, std::vector<std::string> inputs,
                      const char* out) {
    PipelineOp op;
    op.id = id;
    op.inputs = std::move(inputs);
    op.output = out;
    op.window.kind = WindowKind::Time;
    op.window.width_ms = 1;
    op.query = query;
    op.kb = KbMode::None;
    return op;
  };
  return {
      kb_op("A", "cquery1-a", "tA"),
      kb_op("B", "cquery1-b", "tB"),
      stream_op("C", "cquery1-c", {"tA"}, "tC"),
      stream_op("D", "cquery1-d", {"tA"}, "tD"),
      stream_op("E", "cquery1-e", {"tB"}, "tE"),
      stream_op("F", "cquery1-f", {"tB"}, "tF"),
      stream_op("G", "cquery1-g", {"tC", "tD", "tE", "tF"}, "out"),
  };
}

Step1Result run_step1(const GenConfig& shape) {
  const GenConfig& g = shape;
  auto events = generate_stream_events(g);
  PipelineEnv env;
  env.kb = canonical_kb(g);

  struct Section {
    const char* name;
    std::vector<PipelineOp> ops;
  };
  const std::vector<Section> sections = {
      {"q15-local", q15_pipeline(KbMode::LocalMerge)},
      {"q15-service", q15_pipeline(KbMode::RemoteService)},
      {"q16-local", q16_pipeline(KbMode::LocalMerge)},
      {"q16-service", q16_pipeline(KbMode::RemoteService)},
  };

  Step1Result res;
  std::map<std::string, std::string> digests;
  for (const auto& s : sections) {
    PipelineOutcome o = run_pipeline(s.ops, env, events);
    digests[s.name] = o.digest;
    res.summary.push_back({"step1", s.name, o.wall_millis, o.digest});
    for (const auto& m : o.metrics) res.report.push_back({"step1", s.name, m});
  }
  res.q15_modes_agree = digests["q15-local"] == digests["q15-service"];
  res.q16_modes_agree = digests["q16-local"] == digests["q16-service"];
  return res;
}

// Step-2 KB provisioning. Every KB operator reloads its KB file each window.
// The mono operator gets the whole KB; A and B get only the subset their
// query actually uses, extracted once over the run's windows (same count cut
// the operators will produce). The monolithic query needs the whole KB on one
// node; the decomposed form can divide it.
struct Step2Kb {
  PipelineEnv env;
  size_t total = 0, used_a = 0, used_b = 0;
};

Step2Kb step2_provision(const GenConfig& g, const std::vector<GraphEvent>& events) {
  Step2Kb out;
  auto full = canonical_kb(g);

  WindowConfig wc;
  wc.kind = WindowKind::Count;
  wc.max_triples = 1000;
  std::vector<Window> windows = cut_windows(events, wc);
  auto used_a = extract_used_kb(*full, parse_query(query_text("cquery1-a")), windows);
  auto used_b = extract_used_kb(*full, parse_query(query_text("cquery1-b")), windows);

  out.total = full->size();
  out.used_a = used_a.size();
  out.used_b = used_b.size();
  out.env.kb_texts["mono"] =
      std::make_shared<const std::string>(serialize_ntriples(full->triples()));
  out.env.kb_texts["A"] = std::make_shared<const std::string>(serialize_ntriples(used_a));
  out.env.kb_texts["B"] = std::make_shared<const std::string>(serialize_ntriples(used_b));
  return out;
}

Step2Result run_step2(const GenConfig& shape, int timing_runs, int digest_seeds) {
  Step2Result res;

  for (int i = 0; i < digest_seeds; i++) {
    uint64_t s = shape.seed + static_cast<uint64_t>(i);
    res.seeds.push_back(s);
    GenConfig g = shape;
    g.seed = s;
    auto events = generate_stream_events(g);
    Step2Kb kb = step2_provision(g, events);
    res.mono_digests.push_back(run_pipeline(cquery1_mono_pipeline(), kb.env, events).digest);
    res.dag_digests.push_back(run_pipeline(cquery1_dag_pipeline(), kb.env, events).digest);
  }
  res.digests_equal = true;
  for (size_t i = 0; i < res.mono_digests.size(); i++)
    res.digests_equal = res.digests_equal && res.mono_digests[i] == res.dag_digests[i];

  const GenConfig& g = shape;
  auto events = generate_stream_events(g);
  Step2Kb kb = step2_provision(g, events);
  const PipelineEnv& env = kb.env;
  res.kb_total_size = kb.total;
  res.kb_a_size = kb.used_a;
  res.kb_b_size = kb.used_b;
  for (int r = 0; r < timing_runs; r++) {
    PipelineOutcome mono = run_pipeline(cquery1_mono_pipeline(), env, events);
    PipelineOutcome dag = run_pipeline(cquery1_dag_pipeline(), env, events);
    res.mono_walls.push_back(mono.wall_millis);
    res.dag_walls.push_back(dag.wall_millis);
    if (r == 0) {
      res.mono_metrics = mono.metrics;
      res.dag_metrics = dag.metrics;
      for (const auto& m : mono.metrics) res.report.push_back({"step2", "cquery1-mono", m});
      for (const auto& m : dag.metrics) res.report.push_back({"step2", "cquery1-dag", m});
    }
  }
  res.mono_median_millis = median(res.mono_walls);
  res.dag_median_millis = median(res.dag_walls);
  if (res.mono_median_millis > 0)
    res.reduction_percent =
        (res.mono_median_millis - res.dag_median_millis) / res.mono_median_millis * 100.0;
  res.summary.push_back(
      {"step2", "cquery1-mono", res.mono_median_millis, res.mono_digests.front()});
  res.summary.push_back({"step2", "cquery1-dag", res.dag_median_millis, res.dag_digests.front()});
  return res;
}

Step3Result run_step3(const GenConfig& shape) {
  const GenConfig& g = shape;
  auto events = generate_stream_events(g);
  TripleStore full = TripleStore::from_triples(generate_kb_triples(g), true);

  WindowConfig wc;  // the pipelines' window shape
  wc.kind = WindowKind::Count;
  wc.max_triples = 1000;
  std::vector<Window> windows = cut_windows(events, wc);
  size_t timing_n = std::min<size_t>(windows.size(), 12);
  std::vector<Window> timing(windows.begin(),
                             windows.begin() + static_cast<ptrdiff_t>(timing_n));

  Step3Result res;

  auto run_point = [&](const std::string& sub, const std::string& sweep, const Query& q,
                       const std::vector<Triple>& kb_triples, size_t used_size) {
    KbConfig kb;
    kb.mode = KbMode::LocalMerge;
    kb.kb_text = std::make_shared<const std::string>(serialize_ntriples(kb_triples));
    kb.reload_per_window = true;
    Engine eng(q, kb);
    std::string pipeline =
        "cquery1-" + sub + "/" + sweep + "=" + std::to_string(kb_triples.size());
    double total = 0;
    for (const auto& w : timing) {
      WindowResult r = eng.evaluate(w);
      total += r.eval_millis;
      MetricsRow m;
      m.operator_id = sub;
      m.window_seq = w.seq_no;
      m.triples = w.triple_count;
      m.eval_millis = r.eval_millis;
      m.kb_triples_touched = r.kb_triples_touched;
      res.report.push_back({"step3", pipeline, m});
    }
    SweepPoint p;
    p.subquery = sub;
    p.sweep = sweep;
    p.used_size = used_size;
    p.total_size = kb_triples.size();
    p.mean_window_millis = timing.empty() ? 0 : total / static_cast<double>(timing.size());
    p.windows = timing.size();
    res.points.push_back(p);
  };

  const std::vector<std::pair<std::string, std::string>> subs = {{"a", "A"}, {"b", "B"}};
  for (const auto& [qname, label] : subs) {
    Query q = parse_query(query_text("cquery1-" + qname));

    // Sweep (i): the KB is exactly the used set of a growing window sample,
    // so used == total shrinks together.
    std::vector<size_t> prefixes = {1, 3, 9, windows.size()};
    prefixes.erase(std::remove_if(prefixes.begin(), prefixes.end(),
                                  [&](size_t k) { return k > windows.size(); }),
                   prefixes.end());
    prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
    for (size_t k : prefixes) {
      std::vector<Window> sample(windows.begin(), windows.begin() + static_cast<ptrdiff_t>(k));
      std::vector<Triple> used = extract_used_kb(full, q, sample);
      run_point(label, "used", q, used, used.size());
    }

    // Sweep (ii): used set of the whole workload held fixed; total grown with
    // noise triples on a predicate the query never touches.
    std::vector<Triple> used_all = extract_used_kb(full, q, windows);
    for (size_t mult : {size_t{0}, size_t{1}, size_t{4}, size_t{9}}) {
      std::vector<Triple> total_kb = used_all;
      size_t n = used_all.size() * mult;
      total_kb.reserve(used_all.size() + n);
      for (size_t i = 0; i < n; i++) {
        total_kb.push_back({Term::iri("http://example.org/scep/noise/" + std::to_string(i)),
                            Term::iri(voc::ns + "noiseEdge"),
                            Term::iri("http://example.org/scep/noise/" + std::to_string(i + 1))});
      }
      run_point(label, "total", q, total_kb, used_all.size());
    }
  }
  return res;
}

EngineScalingResult run_engine_scaling(const std::vector<uint64_t>& seeds,
                                       const std::vector<int>& engine_counts) {
  EngineScalingResult res;
  res.seeds = seeds;
  res.engine_counts = engine_counts;
  res.all_equal = true;
  for (uint64_t s : seeds) {
    GenConfig g = step1_config(s);
    auto events = generate_stream_events(g);
    PipelineEnv env;
    env.kb = canonical_kb(g);
    std::vector<std::string> row;
    for (int c : engine_counts)
      row.push_back(run_pipeline(q15_pipeline(KbMode::LocalMerge, c), env, events).digest);
    for (const auto& d : row) res.all_equal = res.all_equal && d == row.front();
    res.digests.push_back(std::move(row));
  }
  return res;
}

}  // namespace bench
}  // namespace dscep
