#include "dscep/window.hpp"

#include <algorithm>
#include <stdexcept>

namespace dscep {

Window make_window(uint64_t seq_no, std::vector<GraphEvent> events) {
  if (events.empty()) throw std::invalid_argument("window must contain at least one event");
  Window w;
  w.seq_no = seq_no;
  w.low_ts = events.front().event_ts;
  w.high_ts = events.front().event_ts;
  for (const auto& ev : events) {
    w.triple_count += ev.triples.size();
    w.low_ts = std::min(w.low_ts, ev.event_ts);
    w.high_ts = std::max(w.high_ts, ev.event_ts);
  }
  w.events = std::move(events);
  return w;
}

std::vector<Window> cut_windows(const std::vector<GraphEvent>& events, const WindowConfig& cfg) {
  std::vector<Window> out;
  std::vector<GraphEvent> cur;
  size_t cur_triples = 0;
  int64_t cur_bucket = 0;
  auto flush = [&]() {
    if (!cur.empty()) {
      out.push_back(make_window(out.size(), std::move(cur)));
      cur.clear();
      cur_triples = 0;
    }
  };
  for (const auto& ev : events) {
    if (cfg.kind == WindowKind::Count) {
      size_t n = ev.triples.size();
      if (n > cfg.max_triples) {
        // oversize event: flush whatever is pending, then a window of its own
        flush();
        cur.push_back(ev);
        flush();
        continue;
      }
      if (cur_triples + n > cfg.max_triples) flush();
      cur.push_back(ev);
      cur_triples += n;
    } else {
      int64_t bucket = ev.event_ts / cfg.width_ms;
      if (!cur.empty() && bucket != cur_bucket) flush();
      cur_bucket = bucket;
      cur.push_back(ev);
    }
  }
  flush();
  return out;
}

Window StreamWindower::flush() {
  Window w = make_window(next_seq_++, std::move(cur_));
  cur_.clear();
  cur_triples_ = 0;
  return w;
}

std::vector<Window> StreamWindower::push(GraphEvent ev) {
  std::vector<Window> done;
  if (cfg_.kind == WindowKind::Count) {
    size_t n = ev.triples.size();
    if (n > cfg_.max_triples) {
      if (!cur_.empty()) done.push_back(flush());
      cur_.push_back(std::move(ev));
      done.push_back(flush());
      return done;
    }
    if (cur_triples_ + n > cfg_.max_triples && !cur_.empty()) done.push_back(flush());
    cur_triples_ += n;
    cur_.push_back(std::move(ev));
  } else {
    int64_t bucket = ev.event_ts / cfg_.width_ms;
    if (!cur_.empty() && bucket != cur_bucket_) done.push_back(flush());
    cur_bucket_ = bucket;
    cur_.push_back(std::move(ev));
  }
  return done;
}

std::optional<Window> StreamWindower::finish() {
  if (cur_.empty()) return std::nullopt;
  return flush();
}

std::vector<GraphEvent> merge_order(
    const std::vector<std::pair<std::string, std::vector<GraphEvent>>>& inputs) {
  struct Tagged {
    const GraphEvent* ev;
    const std::string* input;
    size_t arrival;
  };
  std::vector<Tagged> all;
  for (const auto& [name, evs] : inputs) {
    int64_t prev = -1;
    for (size_t i = 0; i < evs.size(); i++) {
      if (evs[i].event_ts < prev)
        throw std::invalid_argument("input " + name + " is not timestamp-ordered");
      prev = evs[i].event_ts;
      all.push_back({&evs[i], &name, i});
    }
  }
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    if (a.ev->event_ts != b.ev->event_ts) return a.ev->event_ts < b.ev->event_ts;
    if (*a.input != *b.input) return *a.input < *b.input;
    return a.arrival < b.arrival;
  });
  std::vector<GraphEvent> out;
  out.reserve(all.size());
  for (const auto& t : all) out.push_back(*t.ev);
  return out;
}

}  // namespace dscep
