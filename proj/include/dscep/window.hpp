#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dscep/rdf.hpp"

namespace dscep {

// A finite batch of whole events. Invariants: events ordered by event_ts
// (ties by merge order), low_ts <= high_ts, seq_no dense from 0 per cutter.
struct Window {
  uint64_t seq_no = 0;
  std::vector<GraphEvent> events;
  size_t triple_count = 0;
  int64_t low_ts = 0;
  int64_t high_ts = 0;
};

Window make_window(uint64_t seq_no, std::vector<GraphEvent> events);

enum class WindowKind { Count, Time };

struct WindowConfig {
  WindowKind kind = WindowKind::Count;
  size_t max_triples = 1000;  // Count: greedy whole-event packing cap
  int64_t width_ms = 1000;    // Time: tumbling bucket width
};

// Offline cutter over an ordered event sequence (both kinds). Count windows
// greedily pack whole events up to the cap; an event larger than the cap gets
// a window of its own. Time windows are tumbling buckets [k*w, (k+1)*w) over
// event_ts; empty buckets yield nothing. seq_no increments per emitted window.
std::vector<Window> cut_windows(const std::vector<GraphEvent>& events, const WindowConfig& cfg);

// Offline k-way timestamp merge used by tests and direct evaluation: events of
// each input must be non-decreasing by event_ts; ties order by input name,
// then input arrival order.
std::vector<GraphEvent> merge_order(
    const std::vector<std::pair<std::string, std::vector<GraphEvent>>>& inputs);

// Incremental cutter with cut_windows semantics: feeding the same ordered
// events through push() and finish() yields exactly cut_windows' output.
class StreamWindower {
 public:
  explicit StreamWindower(WindowConfig cfg) : cfg_(cfg) {}

  // Windows completed by this event (0, 1, or — for an oversize event that
  // also flushes a pending window — 2).
  std::vector<Window> push(GraphEvent ev);
  // Final partial window, if any.
  std::optional<Window> finish();

 private:
  Window flush();

  WindowConfig cfg_;
  std::vector<GraphEvent> cur_;
  size_t cur_triples_ = 0;
  int64_t cur_bucket_ = 0;
  uint64_t next_seq_ = 0;
};

}  // namespace dscep
