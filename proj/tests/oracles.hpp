#pragma once

// Randomized check batteries shared between the unit suites and the
// acceptance harness: one implementation, run at different sizes.
#include <cstdint>
#include <string>
#include <vector>

namespace dscep::testing {

struct Battery {
  int cases = 0;
  int failures = 0;
  std::string note;  // first failure, for the log

  void fail(const std::string& why) {
    failures++;
    if (note.empty()) note = why;
  }
  void merge(const Battery& other) {
    cases += other.cases;
    failures += other.failures;
    if (note.empty()) note = other.note;
  }
};

// evaluate_window vs the naive bottom-up evaluator on random instances.
Battery engine_oracle_battery(uint64_t seed, int instances);

// TripleStore subclass closure vs a plain reachability oracle on random
// class graphs (DAGs; with_cycles adds back edges).
Battery subclass_closure_battery(uint64_t seed, int graphs, int max_nodes, bool with_cycles);

// resolve_same_as / apply_same_as vs a union-find oracle on random graphs.
Battery sameas_battery(uint64_t seed, int graphs);

// cut_windows / StreamWindower invariants on random event sequences:
// equivalence, conservation, cap compliance, dense seq_no, monotone bounds.
Battery window_property_battery(uint64_t seed, int cases);

// Exactly-once delivery over a LocalBroker: every group's delivered offsets
// are exactly {0..messages-1}. live=false consumes a backlog, live=true
// consumes while the producer is still publishing.
Battery bus_exactly_once_battery(uint64_t seed, int messages, const std::vector<int>& group_sizes,
                                 bool live);

}  // namespace dscep::testing
