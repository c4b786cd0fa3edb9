// Command-line front end: data generation, stream replay, role launchers
// (broker / operator / client / KB service) and the three benchmark steps.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dscep/bench.hpp"
#include "dscep/broker_net.hpp"
#include "dscep/bus.hpp"
#include "dscep/errors.hpp"
#include "dscep/kb_service.hpp"
#include "dscep/operator.hpp"
#include "dscep/replay.hpp"
#include "dscep/store.hpp"
#include "dscep/streamgen.hpp"

using namespace dscep;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string(what) + " not readable: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key=value lines, '#' comments. Unknown keys are rejected so typos fail loud.
std::map<std::string, std::string> load_properties(const std::string& path,
                                                   const std::vector<std::string>& known) {
  std::string text = read_file(path, "config");
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    lineno++;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key: " + key);
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key: " + key);
  }
  return kv;
}

// --broker flag > config key > DSCEP_BROKER > loopback default.
std::string broker_address(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("DSCEP_BROKER"); env && *env) return env;
  return "127.0.0.1:7070";
}

// Connects with bounded backoff (the broker may still be starting), then
// gives up with the underlying error.
std::unique_ptr<RemoteBus> connect_bus(const std::string& addr) {
  int delay_ms = 250;
  for (int attempt = 1;; attempt++) {
    try {
      return std::make_unique<RemoteBus>(addr);
    } catch (const NetError& e) {
      if (attempt >= 6) throw NetError("broker unreachable at " + addr + ": " + e.what());
      fprintf(stderr, "dscep: broker %s not reachable (attempt %d), retrying in %dms\n",
              addr.c_str(), attempt, delay_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(delay_ms * 2, 4000);
    }
  }
}

GenConfig load_gen_config(const std::string& config_path, uint64_t seed, bool seed_set) {
  GenConfig cfg;
  if (!config_path.empty()) cfg = gen_config_from_json(read_file(config_path, "gen config"));
  if (seed_set) cfg.seed = seed;
  return cfg;
}

int cmd_gen(const std::string& config_path, uint64_t seed, bool seed_set,
            const std::string& out_stream, const std::string& out_kb, const std::string& voc) {
  if (out_stream.empty() || out_kb.empty())
    throw ConfigError("gen needs --out-stream and --out-kb");
  GenConfig cfg = load_gen_config(config_path, seed, seed_set);
  GenResult r = generate(cfg, out_stream, out_kb, voc);
  printf("events=%zu stream_triples=%zu kb_triples=%zu\n", r.events, r.stream_triples,
         r.kb_triples);
  return 0;
}

int cmd_replay(const std::string& stream, double rate, const std::string& topic,
               const std::string& broker_flag) {
  auto bus = connect_bus(broker_address(broker_flag, ""));
  ReplayStats st = replay_file(*bus, topic, stream, rate);
  printf("events=%zu triples=%zu seconds=%.3f triples_per_sec=%.0f\n", st.events, st.triples,
         st.seconds, st.triples_per_sec);
  return 0;
}

int cmd_launch_broker(const std::string& config_path) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = load_properties(config_path, {"listen"});
  std::string listen = kv.count("listen") ? kv["listen"] : "127.0.0.1:7070";
  LocalBroker broker;
  BrokerServer server(broker, listen);
  printf("broker listening on %s\n", server.address().c_str());
  fflush(stdout);
  wait_for_signal();
  server.stop();
  return 0;
}

int cmd_launch_kbservice(const std::string& config_path) {
  auto kv = load_properties(config_path, {"kb.file", "listen", "canonicalize"});
  if (!kv.count("kb.file")) throw ConfigError(config_path + ": missing required key: kb.file");
  bool canonicalize = !kv.count("canonicalize") || kv["canonicalize"] == "true";
  auto store = std::make_shared<const TripleStore>(
      TripleStore::load_file(kv["kb.file"], canonicalize));
  std::string listen = kv.count("listen") ? kv["listen"] : "127.0.0.1:7071";
  KbService service(store, listen);
  printf("kb service listening on %s (%zu triples)\n", service.address().c_str(),
         service.kb_size());
  fflush(stdout);
  wait_for_signal();
  service.stop();
  return 0;
}

int cmd_launch_operator(const std::string& config_path, const std::string& broker_flag) {
  OperatorSpec spec = load_operator_spec(config_path);
  // The broker address lives outside the operator spec: same file may be
  // reused across hosts with DSCEP_BROKER pointing at the right place.
  auto bus = connect_bus(broker_address(broker_flag, ""));
  OperatorHandle handle = start_operator(*bus, spec);
  printf("operator %s running (inputs -> %s)\n", spec.id.c_str(), spec.output.c_str());
  fflush(stdout);
  handle.join();
  if (handle.failed()) {
    fprintf(stderr, "dscep: operator %s failed: %s\n", spec.id.c_str(), handle.error().c_str());
    return 1;
  }
  return 0;
}

int cmd_launch_client(const std::string& config_path, const std::string& broker_flag) {
  auto kv = load_properties(config_path, {"topics", "group", "window.kind", "window.max_triples",
                                          "window.width_ms", "out", "broker"});
  if (!kv.count("topics")) throw ConfigError(config_path + ": missing required key: topics");
  std::vector<std::string> topics;
  std::stringstream ss(kv["topics"]);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) topics.push_back(part);
  }
  WindowConfig wc;
  if (kv.count("window.kind")) {
    if (kv["window.kind"] == "count") {
      wc.kind = WindowKind::Count;
    } else if (kv["window.kind"] == "time") {
      wc.kind = WindowKind::Time;
    } else {
      throw ConfigError("window.kind must be count or time");
    }
  }
  if (kv.count("window.max_triples")) wc.max_triples = std::stoull(kv["window.max_triples"]);
  if (kv.count("window.width_ms")) wc.width_ms = std::stoll(kv["window.width_ms"]);
  std::string group = kv.count("group") ? kv["group"] : "client";

  auto bus = connect_bus(broker_address(broker_flag, kv.count("broker") ? kv["broker"] : ""));
  ClientResult res = run_client(*bus, topics, group, wc);

  std::ostringstream rows;
  rows << "seq_no,events,triples,low_ts,high_ts\n";
  for (const auto& r : res.rows)
    rows << r.seq_no << "," << r.events << "," << r.triples << "," << r.low_ts << ","
         << r.high_ts << "\n";
  if (kv.count("out")) {
    std::ofstream out(kv["out"]);
    if (!out) throw ConfigError("cannot write " + kv["out"]);
    out << rows.str();
  } else {
    fputs(rows.str().c_str(), stdout);
  }
  printf("windows=%zu triples=%zu digest=%s\n", res.rows.size(), res.triples.size(),
         bench::content_digest(res.triples).c_str());
  return 0;
}

int cmd_bench(const std::string& step, const std::string& config_path, uint64_t seed,
              bool seed_set, int runs, const std::string& out, const std::string& summary_path) {
  std::vector<bench::ReportRow> report;
  std::vector<bench::SummaryRow> summary;

  if (step == "step1") {
    GenConfig shape = config_path.empty() ? bench::step1_config(seed_set ? seed : 1)
                                          : load_gen_config(config_path, seed, seed_set);
    bench::Step1Result r = bench::run_step1(shape);
    report = r.report;
    summary = r.summary;
    for (const auto& s : r.summary)
      printf("%s wall_millis=%.1f digest=%s\n", s.pipeline.c_str(), s.wall_millis,
             s.digest.c_str());
    printf("q15 modes agree: %s\nq16 modes agree: %s\n", r.q15_modes_agree ? "yes" : "NO",
           r.q16_modes_agree ? "yes" : "NO");
  } else if (step == "step2") {
    GenConfig shape = config_path.empty() ? bench::step2_config(seed_set ? seed : 1)
                                          : load_gen_config(config_path, seed, seed_set);
    bench::Step2Result r = bench::run_step2(shape, runs);
    report = r.report;
    summary = r.summary;
    for (size_t i = 0; i < r.seeds.size(); i++)
      printf("seed %llu: mono=%s dag=%s\n", (unsigned long long)r.seeds[i],
             r.mono_digests[i].c_str(), r.dag_digests[i].c_str());
    printf("digests equal: %s\n", r.digests_equal ? "yes" : "NO");
    printf("kb triples: mono=%zu A=%zu B=%zu\n", r.kb_total_size, r.kb_a_size, r.kb_b_size);
    printf("median wall_millis: mono=%.1f dag=%.1f reduction=%.1f%%\n", r.mono_median_millis,
           r.dag_median_millis, r.reduction_percent);
  } else {
    GenConfig shape = config_path.empty() ? bench::step3_config(seed_set ? seed : 1)
                                          : load_gen_config(config_path, seed, seed_set);
    bench::Step3Result r = bench::run_step3(shape);
    report = r.report;
    printf("subquery,sweep,used_size,total_size,mean_window_millis\n");
    for (const auto& p : r.points)
      printf("%s,%s,%zu,%zu,%.3f\n", p.subquery.c_str(), p.sweep.c_str(), p.used_size,
             p.total_size, p.mean_window_millis);
  }

  if (!out.empty()) bench::write_report_csv(out, report);
  if (!summary.empty()) {
    std::string path = summary_path;
    if (path.empty() && !out.empty()) {
      path = out;
      auto dot = path.rfind(".csv");
      path = (dot == path.size() - 4 ? path.substr(0, dot) : path) + "-summary.csv";
    }
    if (!path.empty()) bench::write_summary_csv(path, summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed semantic stream processing toolkit"};
  app.require_subcommand(1);

  // ---- gen
  std::string g_config, g_stream, g_kb, g_voc;
  uint64_t g_seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic stream and knowledge base");
  gen->add_option("--config", g_config, "Generator config (JSON)");
  auto* g_seed_opt = gen->add_option("--seed", g_seed, "Override the config seed");
  gen->add_option("--out-stream", g_stream, "Stream output file (JSONL)")->required();
  gen->add_option("--out-kb", g_kb, "KB output file (N-Triples)")->required();
  gen->add_option("--voc", g_voc, "Vocabulary glossary output file");

  // ---- replay
  std::string r_stream, r_topic = "t1", r_broker;
  double r_rate = 0;
  auto* replay = app.add_subcommand("replay", "Replay a stream file to a broker topic");
  replay->add_option("--stream", r_stream, "Stream file (JSONL)")->required();
  replay->add_option("--rate", r_rate, "Triples per second (0 = unthrottled)");
  replay->add_option("--topic", r_topic, "Target topic");
  replay->add_option("--broker", r_broker, "Broker address (default $DSCEP_BROKER)");

  // ---- launch
  std::string l_role, l_config, l_broker;
  auto* launch = app.add_subcommand("launch", "Run one pipeline role until done/interrupted");
  launch->add_option("role", l_role, "broker|operator|client|kbservice|gen|replay")
      ->required()
      ->check(CLI::IsMember({"broker", "operator", "client", "kbservice", "gen", "replay"}));
  launch->add_option("--config", l_config, "Role config file");
  launch->add_option("--broker", l_broker, "Broker address (default $DSCEP_BROKER)");
  launch->add_option("--stream", r_stream, "replay role: stream file");
  launch->add_option("--rate", r_rate, "replay role: triples per second");
  launch->add_option("--topic", r_topic, "replay role: target topic");
  launch->add_option("--out-stream", g_stream, "gen role: stream output file");
  launch->add_option("--out-kb", g_kb, "gen role: KB output file");
  launch->add_option("--voc", g_voc, "gen role: glossary output file");

  // ---- bench
  std::string b_step, b_config, b_out, b_summary;
  uint64_t b_seed = 0;
  int b_runs = 5;
  auto* bench_cmd = app.add_subcommand("bench", "Run one benchmark step");
  bench_cmd->add_option("step", b_step, "step1|step2|step3")
      ->required()
      ->check(CLI::IsMember({"step1", "step2", "step3"}));
  bench_cmd->add_option("--config", b_config, "Generator config override (JSON)");
  auto* b_seed_opt = bench_cmd->add_option("--seed", b_seed, "Base seed (default 1)");
  bench_cmd->add_option("--runs", b_runs, "Timing repetitions for step2 (default 5)");
  bench_cmd->add_option("--out", b_out, "Per-window report CSV path");
  bench_cmd->add_option("--summary", b_summary, "Summary CSV path (default: <out>-summary.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen(g_config, g_seed, g_seed_opt->count() > 0, g_stream, g_kb, g_voc);
    if (replay->parsed()) return cmd_replay(r_stream, r_rate, r_topic, r_broker);
    if (launch->parsed()) {
      if (l_role == "broker") return cmd_launch_broker(l_config);
      if (l_role == "kbservice") return cmd_launch_kbservice(l_config);
      if (l_role == "operator") return cmd_launch_operator(l_config, l_broker);
      if (l_role == "client") return cmd_launch_client(l_config, l_broker);
      if (l_role == "gen") return cmd_gen(l_config, g_seed, false, g_stream, g_kb, g_voc);
      return cmd_replay(r_stream, r_rate, r_topic, l_broker.empty() ? r_broker : l_broker);
    }
    if (bench_cmd->parsed())
      return cmd_bench(b_step, b_config, b_seed, b_seed_opt->count() > 0, b_runs, b_out,
                       b_summary);
  } catch (const std::exception& e) {
    fprintf(stderr, "dscep: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
