#include "dscep/replay.hpp"

#include <chrono>
#include <thread>

#include "dscep/broker_net.hpp"
#include "dscep/streamgen.hpp"
#include "dscep/wire.hpp"

namespace dscep {

ReplayStats replay_events(Bus& bus, const std::string& topic,
                          const std::vector<GraphEvent>& events, double rate_triples_per_sec,
                          bool publish_eos, bool log_publishes) {
  using clock = std::chrono::steady_clock;
  ReplayStats stats;
  stats.events = events.size();

  std::vector<std::string> payloads;
  payloads.reserve(events.size());
  for (const auto& ev : events) payloads.push_back(encode_event(Event{ev}));

  auto t0 = clock::now();
  if (rate_triples_per_sec <= 0) {
    bus.publish_batch(topic, payloads);
    for (const auto& ev : events) stats.triples += ev.triples.size();
    if (log_publishes) {
      // batch mode logs a single closing entry; pacing tests use throttled mode
      stats.publish_log.emplace_back(std::chrono::duration<double>(clock::now() - t0).count(),
                                     stats.triples);
    }
  } else {
    if (log_publishes) stats.publish_log.reserve(events.size());
    size_t cum = 0;
    for (size_t i = 0; i < events.size(); i++) {
      // absolute schedule: publish i once `cum` triples are due
      auto due = t0 + std::chrono::duration_cast<clock::duration>(
                          std::chrono::duration<double>(cum / rate_triples_per_sec));
      std::this_thread::sleep_until(due);
      bus.publish(topic, payloads[i]);
      cum += events[i].triples.size();
      if (log_publishes) {
        stats.publish_log.emplace_back(std::chrono::duration<double>(clock::now() - t0).count(),
                                       cum);
      }
    }
    stats.triples = cum;
  }
  if (publish_eos) bus.publish(topic, kEosPayload);

  stats.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  stats.triples_per_sec = stats.seconds > 0 ? stats.triples / stats.seconds : 0;
  return stats;
}

ReplayStats replay_file(Bus& bus, const std::string& topic, const std::string& path,
                        double rate_triples_per_sec, bool publish_eos) {
  return replay_events(bus, topic, load_stream_file(path), rate_triples_per_sec, publish_eos);
}

}  // namespace dscep
