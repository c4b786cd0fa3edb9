#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dscep/bus.hpp"
#include "dscep/engine.hpp"
#include "dscep/query.hpp"
#include "dscep/window.hpp"

namespace dscep {

// One metrics line per evaluated window.
struct MetricsRow {
  std::string operator_id;
  uint64_t window_seq = 0;
  size_t triples = 0;  // window input size
  double eval_millis = 0;
  uint64_t kb_triples_touched = 0;
  int engine_id = 0;
};

inline constexpr const char* kMetricsHeader =
    "operator_id,window_seq,triples,eval_millis,kb_triples_touched,engine_id";

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void row(const MetricsRow& r) = 0;
};

// Appends CSV rows (header first) to a file; rows from concurrent engines
// are serialized internally.
class CsvMetricsSink : public MetricsSink {
 public:
  explicit CsvMetricsSink(const std::string& path);
  void row(const MetricsRow& r) override;

 private:
  std::mutex mu_;
  std::string path_;
};

class CollectingMetricsSink : public MetricsSink {
 public:
  void row(const MetricsRow& r) override {
    std::lock_guard<std::mutex> lock(mu_);
    rows_.push_back(r);
  }
  std::vector<MetricsRow> rows() {
    std::lock_guard<std::mutex> lock(mu_);
    return rows_;
  }

 private:
  std::mutex mu_;
  std::vector<MetricsRow> rows_;
};

// Everything one operator node needs. The query must be CONSTRUCT-form
// (operators publish derived events, not solution rows).
struct OperatorSpec {
  std::string id;
  std::vector<std::string> inputs;  // bus topics, distinct
  std::string output;               // bus topic
  WindowConfig window;
  int engine_count = 1;
  size_t merge_buffer = 65536;  // per-input buffered events before backpressure
  Query query;
  KbConfig kb;
  std::shared_ptr<MetricsSink> metrics;  // optional
};

// Running operator. join() returns once every thread has stopped (normally
// after EOS on all inputs has flushed through, or after a hard error).
class OperatorHandle {
 public:
  OperatorHandle() = default;

  void join();
  bool failed() const;
  std::string error() const;
  bool joinable() const { return state_ != nullptr; }

 private:
  friend OperatorHandle start_operator(Bus& bus, OperatorSpec spec);
  struct State;
  std::shared_ptr<State> state_;
};

// Validates the spec, registers all consumer groups (inputs and the internal
// window topic), then starts aggregator / engine / publisher threads. Returns
// with subscriptions in place, so events published afterwards are never lost.
// Pipeline shape:
//   inputs -> watermark merge -> window cutter -> "__win.<id>" topic
//   -> engine pool (consumer group) -> seq-reordering publisher -> output
// Derived triples are stamped with their window's high_ts; one EOS marker is
// published on the output topic after the last window.
OperatorHandle start_operator(Bus& bus, OperatorSpec spec);

// Properties-file front end for the CLI:
//   id=<op>            topics=<in1,in2>      output=<topic>
//   window.kind=count|time  window.max_triples=N  window.width_ms=N
//   engines=N          merge_buffer=N        query.file=<path>
//   kb.mode=local|service|none  kb.file=<path>  kb.reload=true|false
//   kb.endpoint=<name=host:port[,name=addr...]>  metrics.file=<path>
// Unknown keys are rejected. kb.mode=service builds a socket transport.
OperatorSpec load_operator_spec(const std::string& properties_path);

// Terminal consumer: merges the given topics by the operator watermark rule,
// cuts windows, and collects both per-window rows and all observed triples
// (content only). Returns after EOS on every input. Throws on hard errors.
struct ClientWindowRow {
  uint64_t seq_no = 0;
  size_t events = 0;
  size_t triples = 0;
  int64_t low_ts = 0;
  int64_t high_ts = 0;
};

struct ClientResult {
  std::vector<ClientWindowRow> rows;
  std::vector<Triple> triples;  // every triple seen, in consumption order
};

ClientResult run_client(Bus& bus, const std::vector<std::string>& inputs,
                        const std::string& group, const WindowConfig& window,
                        size_t merge_buffer = 65536);

}  // namespace dscep
