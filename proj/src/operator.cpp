#include "dscep/operator.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dscep/errors.hpp"
#include "dscep/kb_service.hpp"
#include "dscep/wire.hpp"

namespace dscep {

using nlohmann::json;

// ------------------------------------------------------------ metrics sinks

CsvMetricsSink::CsvMetricsSink(const std::string& path) : path_(path) {
  std::ofstream f(path_, std::ios::trunc);
  if (!f) throw ConfigError("cannot open metrics file: " + path_);
  f << kMetricsHeader << "\n";
}

void CsvMetricsSink::row(const MetricsRow& r) {
  std::lock_guard<std::mutex> lock(mu_);
  std::ofstream f(path_, std::ios::app);
  char millis[32];
  snprintf(millis, sizeof millis, "%.3f", r.eval_millis);
  f << r.operator_id << ',' << r.window_seq << ',' << r.triples << ',' << millis << ','
    << r.kb_triples_touched << ',' << r.engine_id << "\n";
}

// -------------------------------------------------------- window envelopes

namespace {

std::string encode_window(const Window& w) {
  json events = json::array();
  for (const auto& ev : w.events) events.push_back(event_to_json(Event{ev}));
  json j{{"seq", w.seq_no}, {"low", w.low_ts}, {"high", w.high_ts}, {"events", std::move(events)}};
  return j.dump();
}

Window decode_window(const std::string& payload) {
  json j = json::parse(payload, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("seq") || !j.contains("events") ||
      !j["events"].is_array() || j["events"].empty()) {
    throw DecodeError("malformed window envelope", "events");
  }
  Window w;
  w.seq_no = j["seq"].get<uint64_t>();
  w.low_ts = j.value("low", int64_t{0});
  w.high_ts = j.value("high", int64_t{0});
  for (const auto& ej : j["events"]) {
    Event ev = event_from_json(ej);
    if (!std::holds_alternative<GraphEvent>(ev))
      throw DecodeError("window envelope holds a non-graph event", "events");
    GraphEvent ge = std::get<GraphEvent>(std::move(ev));
    w.triple_count += ge.triples.size();
    w.events.push_back(std::move(ge));
  }
  return w;
}

GraphEvent normalize_event(Event ev, const std::string& topic, uint64_t offset) {
  if (auto* ge = std::get_if<GraphEvent>(&ev)) return std::move(*ge);
  const auto& tt = std::get<TimestampedTriple>(ev);
  GraphEvent ge;
  ge.graph_id = topic + "/" + std::to_string(offset);
  ge.event_ts = tt.ts;
  ge.triples.push_back(tt);
  return ge;
}

struct InputBuf {
  std::string topic;
  std::unique_ptr<Subscription> sub;
  std::deque<GraphEvent> q;
  bool closed = false;
  int64_t last_ts = -1;
};

struct EngineOut {
  uint64_t seq = 0;
  std::vector<std::string> payloads;
  bool done = false;
};

}  // namespace

// ----------------------------------------------------------- operator body

struct OperatorHandle::State {
  OperatorSpec spec;
  Bus* bus = nullptr;
  std::string win_topic;
  std::shared_ptr<Engine> engine;

  std::atomic<bool> stop{false};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::string err;

  // inputs -> aggregator
  std::mutex agg_mu;
  std::condition_variable agg_cv;    // data arrived / input closed / stop
  std::condition_variable space_cv;  // buffer drained
  std::vector<InputBuf> inputs;

  // engines -> publisher
  std::mutex pq_mu;
  std::condition_variable pq_cv;
  std::deque<EngineOut> pq;

  std::vector<std::unique_ptr<Subscription>> engine_subs;
  std::vector<std::thread> threads;

  void set_error(const std::string& msg) {
    {
      std::lock_guard<std::mutex> lock(err_mu);
      if (err.empty()) err = msg;
    }
    failed = true;
    stop = true;
    agg_cv.notify_all();
    space_cv.notify_all();
    pq_cv.notify_all();
  }

  void emit_metrics(const MetricsRow& r) {
    if (spec.metrics) spec.metrics->row(r);
  }

  void reader_main(size_t input_ix);
  void aggregator_main();
  void engine_main(int engine_ix);
  void publisher_main();
};

void OperatorHandle::State::reader_main(size_t input_ix) {
  InputBuf& buf = inputs[input_ix];
  try {
    for (;;) {
      if (stop) return;
      auto msg = buf.sub->next(200);
      if (!msg) continue;
      if (is_eos_payload(msg->payload)) {
        buf.sub->ack(msg->offset);
        std::lock_guard<std::mutex> lock(agg_mu);
        buf.closed = true;
        agg_cv.notify_all();
        return;
      }
      Event ev = decode_event(msg->payload);
      GraphEvent ge = normalize_event(std::move(ev), buf.topic, msg->offset);
      {
        std::unique_lock<std::mutex> lock(agg_mu);
        if (ge.event_ts < buf.last_ts) {
          set_error("operator " + spec.id + ": input " + buf.topic +
                    " is not timestamp-ordered (ts " + std::to_string(ge.event_ts) + " after " +
                    std::to_string(buf.last_ts) + ")");
          return;
        }
        buf.last_ts = ge.event_ts;
        space_cv.wait(lock, [&] { return stop.load() || buf.q.size() < spec.merge_buffer; });
        if (stop) return;
        buf.q.push_back(std::move(ge));
        agg_cv.notify_all();
      }
      buf.sub->ack(msg->offset);
    }
  } catch (const std::exception& e) {
    set_error("operator " + spec.id + ": input " + buf.topic + " failed: " + e.what());
  }
}

void OperatorHandle::State::aggregator_main() {
  try {
    StreamWindower cutter(spec.window);
    auto publish_win = [&](const Window& w) { bus->publish(win_topic, encode_window(w)); };

    std::unique_lock<std::mutex> lock(agg_mu);
    for (;;) {
      // Watermark rule: an event is releasable only when every open input has
      // a buffered head, so nothing earlier can still arrive.
      agg_cv.wait(lock, [&] {
        if (stop) return true;
        for (const auto& b : inputs)
          if (!b.closed && b.q.empty()) return false;
        return true;
      });
      if (stop) return;

      InputBuf* pick = nullptr;
      for (auto& b : inputs) {
        if (b.q.empty()) continue;
        if (!pick || b.q.front().event_ts < pick->q.front().event_ts ||
            (b.q.front().event_ts == pick->q.front().event_ts && b.topic < pick->topic)) {
          pick = &b;
        }
      }
      if (!pick) {
        bool all_closed = std::all_of(inputs.begin(), inputs.end(),
                                      [](const InputBuf& b) { return b.closed; });
        if (all_closed) break;
        continue;  // an input reopened the wait predicate without data
      }

      GraphEvent ev = std::move(pick->q.front());
      pick->q.pop_front();
      space_cv.notify_all();
      lock.unlock();
      for (auto& w : cutter.push(std::move(ev))) publish_win(w);
      lock.lock();
    }
    lock.unlock();

    if (auto fin = cutter.finish()) publish_win(*fin);
    for (int i = 0; i < spec.engine_count; i++) bus->publish(win_topic, kEosPayload);
  } catch (const std::exception& e) {
    set_error("operator " + spec.id + ": aggregator failed: " + e.what());
  }
}

void OperatorHandle::State::engine_main(int engine_ix) {
  Subscription& sub = *engine_subs[engine_ix];
  try {
    for (;;) {
      if (stop) return;
      auto msg = sub.next(200);
      if (!msg) continue;
      if (is_eos_payload(msg->payload)) {
        sub.ack(msg->offset);
        std::lock_guard<std::mutex> lock(pq_mu);
        pq.push_back(EngineOut{0, {}, true});
        pq_cv.notify_all();
        return;
      }
      Window w = decode_window(msg->payload);
      WindowResult res = engine->evaluate(w);

      EngineOut out;
      out.seq = w.seq_no;
      for (size_t g = 0; g < res.construct_groups.size(); g++) {
        std::vector<TimestampedTriple> tts;
        tts.reserve(res.construct_groups[g].size());
        for (const auto& t : res.construct_groups[g])
          tts.push_back(TimestampedTriple{t, w.high_ts});
        GraphEvent ge = make_graph_event(
            spec.id + "/" + std::to_string(w.seq_no) + "/" + std::to_string(g), std::move(tts));
        out.payloads.push_back(encode_event(Event{std::move(ge)}));
      }

      MetricsRow row;
      row.operator_id = spec.id;
      row.window_seq = w.seq_no;
      row.triples = w.triple_count;
      row.eval_millis = res.eval_millis;
      row.kb_triples_touched = res.kb_triples_touched;
      row.engine_id = engine_ix;
      emit_metrics(row);

      {
        std::lock_guard<std::mutex> lock(pq_mu);
        pq.push_back(std::move(out));
        pq_cv.notify_all();
      }
      sub.ack(msg->offset);
    }
  } catch (const EvalError& e) {
    std::string detail = e.endpoint.empty() ? "" : " (endpoint " + e.endpoint + ")";
    set_error("operator " + spec.id + ": evaluation failed: " + e.what() + detail);
  } catch (const std::exception& e) {
    set_error("operator " + spec.id + ": engine failed: " + e.what());
  }
}

void OperatorHandle::State::publisher_main() {
  const size_t reorder_cap = 4 * static_cast<size_t>(spec.engine_count);
  try {
    std::map<uint64_t, std::vector<std::string>> pending;
    uint64_t expected = 0;
    int done = 0;
    for (;;) {
      EngineOut out;
      {
        std::unique_lock<std::mutex> lock(pq_mu);
        pq_cv.wait(lock, [&] { return stop.load() || !pq.empty(); });
        if (stop) return;
        out = std::move(pq.front());
        pq.pop_front();
      }
      if (out.done) {
        if (++done == spec.engine_count) break;
        continue;
      }
      pending.emplace(out.seq, std::move(out.payloads));
      if (pending.size() > reorder_cap) {
        set_error("operator " + spec.id + ": window reorder buffer overflow (waiting for seq " +
                  std::to_string(expected) + ")");
        return;
      }
      while (!pending.empty() && pending.begin()->first == expected) {
        for (const auto& payload : pending.begin()->second) bus->publish(spec.output, payload);
        pending.erase(pending.begin());
        expected++;
      }
    }
    if (!pending.empty()) {
      set_error("operator " + spec.id + ": window results ended with a gap at seq " +
                std::to_string(expected));
      return;
    }
    bus->publish(spec.output, kEosPayload);
  } catch (const std::exception& e) {
    set_error("operator " + spec.id + ": publisher failed: " + e.what());
  }
}

void OperatorHandle::join() {
  if (!state_) return;
  for (auto& t : state_->threads)
    if (t.joinable()) t.join();
}

bool OperatorHandle::failed() const { return state_ && state_->failed; }

std::string OperatorHandle::error() const {
  if (!state_) return "";
  std::lock_guard<std::mutex> lock(state_->err_mu);
  return state_->err;
}

OperatorHandle start_operator(Bus& bus, OperatorSpec spec) {
  if (spec.id.empty() || spec.id.find_first_of(", \t\n") != std::string::npos)
    throw ConfigError("operator id must be non-empty without spaces or commas");
  if (spec.inputs.empty()) throw ConfigError("operator needs at least one input topic");
  {
    auto sorted = spec.inputs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("operator input topics must be distinct");
  }
  if (spec.output.empty()) throw ConfigError("operator needs an output topic");
  for (const auto& in : spec.inputs)
    if (in == spec.output) throw ConfigError("operator output topic must not be among its inputs");
  if (spec.engine_count < 1 || spec.engine_count > 64)
    throw ConfigError("engine count must be between 1 and 64");
  if (spec.merge_buffer < 1) throw ConfigError("merge_buffer must be at least 1");
  if (spec.query.form != Query::Form::Construct)
    throw ConfigError("operator query must be CONSTRUCT-form");

  auto state = std::make_shared<OperatorHandle::State>();
  state->spec = std::move(spec);
  state->bus = &bus;
  state->win_topic = "__win." + state->spec.id;
  // Engine construction performs the kb/SERVICE validation up front.
  state->engine = std::make_shared<Engine>(state->spec.query, state->spec.kb);

  // Register every consumer group before returning so later publishes are
  // delivered regardless of thread start order.
  for (const auto& topic : state->spec.inputs) {
    bus.ensure_group(topic, state->spec.id);
    InputBuf buf;
    buf.topic = topic;
    buf.sub = bus.subscribe(topic, state->spec.id, "agg");
    state->inputs.push_back(std::move(buf));
  }
  const std::string engine_group = state->spec.id + ".engines";
  bus.ensure_group(state->win_topic, engine_group);
  for (int i = 0; i < state->spec.engine_count; i++) {
    state->engine_subs.push_back(
        bus.subscribe(state->win_topic, engine_group, "engine-" + std::to_string(i)));
  }

  for (size_t i = 0; i < state->inputs.size(); i++)
    state->threads.emplace_back([state, i] { state->reader_main(i); });
  state->threads.emplace_back([state] { state->aggregator_main(); });
  for (int i = 0; i < state->spec.engine_count; i++)
    state->threads.emplace_back([state, i] { state->engine_main(i); });
  state->threads.emplace_back([state] { state->publisher_main(); });

  OperatorHandle handle;
  handle.state_ = std::move(state);
  return handle;
}

// -------------------------------------------------------------- properties

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(std::string("cannot open ") + what + ": " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int64_t parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    int64_t n = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

}  // namespace

OperatorSpec load_operator_spec(const std::string& properties_path) {
  static const std::set<std::string> kKnown = {
      "id",      "topics",      "output",   "window.kind", "window.max_triples",
      "window.width_ms", "engines", "merge_buffer", "query.file",  "kb.mode",
      "kb.file", "kb.endpoint", "kb.reload", "metrics.file"};

  std::string text = read_file(properties_path, "operator properties");
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
      throw ConfigError(properties_path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (!kKnown.count(key))
      throw ConfigError(properties_path + ":" + std::to_string(lineno) + ": unknown key: " + key);
    if (!kv.emplace(key, val).second)
      throw ConfigError(properties_path + ":" + std::to_string(lineno) + ": duplicate key: " + key);
  }
  for (const char* req : {"id", "topics", "output", "query.file"})
    if (!kv.count(req)) throw ConfigError(properties_path + ": missing required key: " + req);

  OperatorSpec spec;
  spec.id = kv["id"];
  spec.inputs = split_list(kv["topics"]);
  spec.output = kv["output"];

  if (kv.count("window.kind")) {
    const std::string& k = kv["window.kind"];
    if (k == "count") {
      spec.window.kind = WindowKind::Count;
    } else if (k == "time") {
      spec.window.kind = WindowKind::Time;
    } else {
      throw ConfigError("window.kind must be count or time, got: " + k);
    }
  }
  if (kv.count("window.max_triples")) {
    int64_t n = parse_int(kv["window.max_triples"], "window.max_triples");
    if (n < 1) throw ConfigError("window.max_triples must be positive");
    spec.window.max_triples = static_cast<size_t>(n);
  }
  if (kv.count("window.width_ms")) {
    int64_t n = parse_int(kv["window.width_ms"], "window.width_ms");
    if (n < 1) throw ConfigError("window.width_ms must be positive");
    spec.window.width_ms = n;
  }
  if (kv.count("engines"))
    spec.engine_count = static_cast<int>(parse_int(kv["engines"], "engines"));
  if (kv.count("merge_buffer"))
    spec.merge_buffer = static_cast<size_t>(parse_int(kv["merge_buffer"], "merge_buffer"));

  spec.query = parse_query(read_file(kv["query.file"], "query file"));

  std::string mode = kv.count("kb.mode") ? kv["kb.mode"] : "none";
  if (mode == "none") {
    spec.kb.mode = KbMode::None;
  } else if (mode == "local") {
    if (!kv.count("kb.file")) throw ConfigError("kb.mode=local requires kb.file");
    spec.kb.mode = KbMode::LocalMerge;
    spec.kb.kb_text = std::make_shared<const std::string>(read_file(kv["kb.file"], "kb file"));
    if (kv.count("kb.reload")) {
      const std::string& r = kv["kb.reload"];
      if (r == "true") {
        spec.kb.reload_per_window = true;
      } else if (r == "false") {
        spec.kb.reload_per_window = false;
      } else {
        throw ConfigError("kb.reload must be true or false, got: " + r);
      }
    }
  } else if (mode == "service") {
    if (!kv.count("kb.endpoint")) throw ConfigError("kb.mode=service requires kb.endpoint");
    spec.kb.mode = KbMode::RemoteService;
    for (const auto& entry : split_list(kv["kb.endpoint"])) {
      auto eq = entry.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 >= entry.size())
        throw ConfigError("kb.endpoint entries must look like name=host:port, got: " + entry);
      spec.kb.endpoints.emplace(trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
    }
    spec.kb.transport = std::make_shared<SocketServiceTransport>(spec.kb.endpoints);
  } else {
    throw ConfigError("kb.mode must be local, service or none, got: " + mode);
  }

  if (kv.count("metrics.file")) spec.metrics = std::make_shared<CsvMetricsSink>(kv["metrics.file"]);
  return spec;
}

// ------------------------------------------------------------------ client

ClientResult run_client(Bus& bus, const std::vector<std::string>& inputs,
                        const std::string& group, const WindowConfig& window,
                        size_t merge_buffer) {
  if (inputs.empty()) throw ConfigError("client needs at least one input topic");

  struct ClientState {
    std::mutex mu;
    std::condition_variable cv;
    std::condition_variable space;
    std::vector<InputBuf> bufs;
    std::atomic<bool> stop{false};
    std::string err;

    void fail(const std::string& msg) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (err.empty()) err = msg;
      }
      stop = true;
      cv.notify_all();
      space.notify_all();
    }
  } st;

  for (const auto& topic : inputs) {
    bus.ensure_group(topic, group);
    InputBuf buf;
    buf.topic = topic;
    buf.sub = bus.subscribe(topic, group, "client");
    st.bufs.push_back(std::move(buf));
  }

  std::vector<std::thread> readers;
  for (auto& buf : st.bufs) {
    readers.emplace_back([&st, &buf, merge_buffer] {
      try {
        for (;;) {
          if (st.stop) return;
          auto msg = buf.sub->next(200);
          if (!msg) continue;
          if (is_eos_payload(msg->payload)) {
            buf.sub->ack(msg->offset);
            std::lock_guard<std::mutex> lock(st.mu);
            buf.closed = true;
            st.cv.notify_all();
            return;
          }
          Event ev = decode_event(msg->payload);
          GraphEvent ge = normalize_event(std::move(ev), buf.topic, msg->offset);
          {
            std::unique_lock<std::mutex> lock(st.mu);
            if (ge.event_ts < buf.last_ts) {
              st.fail("client input " + buf.topic + " is not timestamp-ordered");
              return;
            }
            buf.last_ts = ge.event_ts;
            st.space.wait(lock, [&] { return st.stop.load() || buf.q.size() < merge_buffer; });
            if (st.stop) return;
            buf.q.push_back(std::move(ge));
            st.cv.notify_all();
          }
          buf.sub->ack(msg->offset);
        }
      } catch (const std::exception& e) {
        st.fail("client input " + buf.topic + " failed: " + e.what());
      }
    });
  }

  ClientResult result;
  StreamWindower cutter(window);
  auto record = [&](const Window& w) {
    result.rows.push_back({w.seq_no, w.events.size(), w.triple_count, w.low_ts, w.high_ts});
  };

  {
    std::unique_lock<std::mutex> lock(st.mu);
    for (;;) {
      st.cv.wait(lock, [&] {
        if (st.stop) return true;
        for (const auto& b : st.bufs)
          if (!b.closed && b.q.empty()) return false;
        return true;
      });
      if (st.stop) break;

      InputBuf* pick = nullptr;
      for (auto& b : st.bufs) {
        if (b.q.empty()) continue;
        if (!pick || b.q.front().event_ts < pick->q.front().event_ts ||
            (b.q.front().event_ts == pick->q.front().event_ts && b.topic < pick->topic)) {
          pick = &b;
        }
      }
      if (!pick) {
        bool all_closed = std::all_of(st.bufs.begin(), st.bufs.end(),
                                      [](const InputBuf& b) { return b.closed; });
        if (all_closed) break;
        continue;
      }

      GraphEvent ev = std::move(pick->q.front());
      pick->q.pop_front();
      st.space.notify_all();
      lock.unlock();
      for (const auto& tt : ev.triples) result.triples.push_back(tt.triple);
      for (auto& w : cutter.push(std::move(ev))) record(w);
      lock.lock();
    }
  }
  st.stop = true;
  st.cv.notify_all();
  st.space.notify_all();
  for (auto& t : readers)
    if (t.joinable()) t.join();

  if (!st.err.empty()) throw BusError(st.err);
  if (auto fin = cutter.finish()) record(*fin);
  return result;
}

}  // namespace dscep
