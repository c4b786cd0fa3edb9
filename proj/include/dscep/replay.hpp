#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dscep/bus.hpp"
#include "dscep/rdf.hpp"

namespace dscep {

struct ReplayStats {
  size_t events = 0;
  size_t triples = 0;
  double seconds = 0;
  double triples_per_sec = 0;
  // One (seconds since start, cumulative triples) entry per publish when
  // logging is on; pacing tests derive rolling rates from it.
  std::vector<std::pair<double, size_t>> publish_log;
};

// Publishes the events to one topic in order, then (by default) an EOS
// marker. rate_triples_per_sec > 0 paces against an absolute schedule: event
// i is due when cumulative published triples reach rate * elapsed, so delays
// never accumulate. rate <= 0 replays unthrottled via batched publishes.
ReplayStats replay_events(Bus& bus, const std::string& topic,
                          const std::vector<GraphEvent>& events, double rate_triples_per_sec,
                          bool publish_eos = true, bool log_publishes = false);

ReplayStats replay_file(Bus& bus, const std::string& topic, const std::string& path,
                        double rate_triples_per_sec, bool publish_eos = true);

}  // namespace dscep
