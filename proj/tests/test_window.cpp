#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "dscep/rdf.hpp"
#include "dscep/window.hpp"
#include "oracles.hpp"

using namespace dscep;
using dscep::testing::Battery;

namespace {

GraphEvent ev(const std::string& id, int64_t ts, size_t triples) {
  std::vector<TimestampedTriple> tts;
  for (size_t i = 0; i < triples; i++) {
    tts.push_back({Triple{Term::iri("http://w/" + id), Term::iri("http://w/p"),
                          Term::integer(int64_t(i))},
                   ts});
  }
  return make_graph_event(id, std::move(tts));
}

}  // namespace

TEST_CASE("count windows pack whole events greedily") {
  WindowConfig cfg{WindowKind::Count, 10, 1000};
  auto ws = cut_windows({ev("a", 1, 4), ev("b", 2, 4), ev("c", 3, 4), ev("d", 4, 2)}, cfg);
  REQUIRE(ws.size() == 2);
  CHECK(ws[0].triple_count == 8);  // a+b; c would overflow
  CHECK(ws[1].triple_count == 6);  // c+d
  CHECK(ws[0].seq_no == 0);
  CHECK(ws[1].seq_no == 1);
  CHECK(ws[0].low_ts == 1);
  CHECK(ws[0].high_ts == 2);
  CHECK(ws[1].low_ts == 3);
  CHECK(ws[1].high_ts == 4);
}

TEST_CASE("oversize events get windows of their own") {
  WindowConfig cfg{WindowKind::Count, 5, 1000};
  auto ws = cut_windows({ev("a", 1, 2), ev("big", 2, 9), ev("b", 3, 2)}, cfg);
  REQUIRE(ws.size() == 3);
  CHECK(ws[0].events.size() == 1);  // pending flushed before the oversize
  CHECK(ws[1].events.size() == 1);
  CHECK(ws[1].triple_count == 9);
  CHECK(ws[2].triple_count == 2);

  // incremental cutter emits both windows from the single oversize push
  StreamWindower sw(cfg);
  CHECK(sw.push(ev("a", 1, 2)).empty());
  auto done = sw.push(ev("big", 2, 9));
  REQUIRE(done.size() == 2);
  CHECK(done[0].triple_count == 2);
  CHECK(done[1].triple_count == 9);
  CHECK_FALSE(sw.finish().has_value());
}

TEST_CASE("time windows bucket by timestamp and skip empty buckets") {
  WindowConfig cfg{WindowKind::Time, 1000, 10};
  auto ws = cut_windows({ev("a", 0, 1), ev("b", 9, 1), ev("c", 10, 1), ev("d", 47, 1)}, cfg);
  REQUIRE(ws.size() == 3);
  CHECK(ws[0].events.size() == 2);  // bucket [0,10)
  CHECK(ws[1].events.size() == 1);  // bucket [10,20)
  CHECK(ws[2].events.size() == 1);  // bucket [40,50); empties in between skipped
  CHECK(ws[2].seq_no == 2);         // numbering stays dense regardless
}

TEST_CASE("empty input yields no windows") {
  CHECK(cut_windows({}, WindowConfig{}).empty());
  StreamWindower sw(WindowConfig{});
  CHECK_FALSE(sw.finish().has_value());
}

TEST_CASE("make_window computes bounds and rejects empty") {
  Window w = make_window(7, {ev("a", 5, 2), ev("b", 3, 1)});
  CHECK(w.seq_no == 7);
  CHECK(w.low_ts == 3);
  CHECK(w.high_ts == 5);
  CHECK(w.triple_count == 3);
  CHECK_THROWS_AS(make_window(0, {}), std::invalid_argument);
}

TEST_CASE("merge_order interleaves by timestamp, name, then arrival") {
  std::vector<std::pair<std::string, std::vector<GraphEvent>>> inputs{
      {"t2", {ev("x", 1, 1), ev("y", 5, 1)}},
      {"t1", {ev("p", 1, 1), ev("q", 1, 1), ev("r", 9, 1)}},
  };
  auto merged = merge_order(inputs);
  REQUIRE(merged.size() == 5);
  CHECK(merged[0].graph_id == "p");  // ts 1: t1 before t2, arrival order within
  CHECK(merged[1].graph_id == "q");
  CHECK(merged[2].graph_id == "x");
  CHECK(merged[3].graph_id == "y");
  CHECK(merged[4].graph_id == "r");

  CHECK_THROWS_AS(merge_order({{"bad", {ev("a", 5, 1), ev("b", 1, 1)}}}), std::invalid_argument);
}

TEST_CASE("merge_order equals a stable-sort oracle on random inputs") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 200; it++) {
    int n_inputs = 1 + int(rng() % 4);
    std::vector<std::pair<std::string, std::vector<GraphEvent>>> inputs;
    for (int i = 0; i < n_inputs; i++) {
      std::string name = "in" + std::to_string(i);
      int64_t ts = int64_t(rng() % 3);
      std::vector<GraphEvent> evs;
      int count = int(rng() % 8);
      for (int j = 0; j < count; j++) {
        evs.push_back(ev(name + "." + std::to_string(j), ts, 1 + rng() % 3));
        ts += int64_t(rng() % 3);
      }
      inputs.emplace_back(std::move(name), std::move(evs));
    }

    struct Row {
      GraphEvent ev;
      std::string input;
      size_t arrival;
    };
    std::vector<Row> rows;
    for (const auto& [name, evs] : inputs) {
      for (size_t j = 0; j < evs.size(); j++) rows.push_back({evs[j], name, j});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.ev.event_ts != b.ev.event_ts) return a.ev.event_ts < b.ev.event_ts;
      if (a.input != b.input) return a.input < b.input;
      return a.arrival < b.arrival;
    });
    std::vector<GraphEvent> want;
    for (auto& r : rows) want.push_back(std::move(r.ev));

    CHECK(merge_order(inputs) == want);
  }
}

TEST_CASE("windowing invariants hold on random streams") {
  Battery b = dscep::testing::window_property_battery(23, 1200);
  INFO(b.note);
  CHECK(b.cases == 1200);
  CHECK(b.failures == 0);
}
