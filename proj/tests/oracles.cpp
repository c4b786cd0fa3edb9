#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "dscep/bus.hpp"
#include "dscep/engine.hpp"
#include "dscep/rdf.hpp"
#include "dscep/store.hpp"
#include "dscep/window.hpp"
#include "generators.hpp"
#include "naive_eval.hpp"

namespace dscep::testing {

namespace {

using Rng = std::mt19937_64;

int pick(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

Battery engine_oracle_battery(uint64_t seed, int instances) {
  Battery b;
  Rng rng(seed);
  for (int i = 0; i < instances; i++) {
    b.cases++;
    RandomInstance inst = random_instance(rng);
    KbConfig cfg = instance_kb_config(inst, i % 2 == 0);
    WindowResult got = evaluate_window(inst.q, inst.w, cfg);
    NaiveResult want = naive_evaluate(inst.q, inst.w, inst.kb, inst.mode);
    bool ok = inst.q.form == Query::Form::Select
                  ? same_solutions(got.solutions, want.solutions)
                  : same_groups(got.construct_groups, want.construct_groups);
    if (!ok) b.fail("engine/naive divergence at instance " + std::to_string(i));
  }
  return b;
}

Battery subclass_closure_battery(uint64_t seed, int graphs, int max_nodes, bool with_cycles) {
  Battery b;
  Rng rng(seed);
  auto cls = [](int i) { return Term::iri("http://cls.test/C" + std::to_string(i)); };
  for (int g = 0; g < graphs; g++) {
    int n = pick(rng, 2, max_nodes);
    int edges = pick(rng, 1, std::min(3 * n, 600));
    std::set<std::pair<int, int>> es;
    for (int i = 0; i < edges; i++) {
      int a = pick(rng, 0, n - 1), c = pick(rng, 0, n - 1);
      if (a == c) continue;
      if (a > c && !(with_cycles && pick(rng, 1, 100) <= 15)) std::swap(a, c);
      es.insert({a, c});
    }
    std::vector<Triple> triples;
    std::vector<std::vector<int>> below(n);  // super -> direct subs
    for (auto [a, c] : es) {
      triples.push_back({cls(a), Term::iri(rdf_ns::sub_class_of), cls(c)});
      below[c].push_back(a);
    }
    // unrelated triples must not disturb the closure
    for (int i = 0; i < 5; i++)
      triples.push_back({Term::iri("http://cls.test/x" + std::to_string(i)),
                         Term::iri(rdf_ns::type), cls(pick(rng, 0, n - 1))});
    TripleStore store = TripleStore::from_triples(triples);

    for (int c = 0; c < n; c++) {
      b.cases++;
      // oracle: BFS towards subclasses
      std::vector<bool> seen(n, false);
      std::vector<int> stack{c};
      seen[c] = true;
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (int y : below[x]) {
          if (!seen[y]) {
            seen[y] = true;
            stack.push_back(y);
          }
        }
      }
      std::vector<Term> want;
      for (int i = 0; i < n; i++) {
        if (seen[i]) want.push_back(cls(i));
      }
      std::sort(want.begin(), want.end());
      std::vector<Term> got = store.subclasses_of(cls(c));
      if (got != want) {
        b.fail("closure mismatch, graph " + std::to_string(g) + " class " + std::to_string(c));
        continue;
      }
      int sub = pick(rng, 0, n - 1);
      if (store.is_subclass(cls(sub), cls(c)) != seen[sub])
        b.fail("is_subclass mismatch, graph " + std::to_string(g));
    }
    // a class the schema never mentions closes to itself
    b.cases++;
    Term ghost = Term::iri("http://cls.test/ghost");
    if (store.subclasses_of(ghost) != std::vector<Term>{ghost})
      b.fail("absent class should close to {self}");
  }
  return b;
}

Battery sameas_battery(uint64_t seed, int graphs) {
  Battery b;
  Rng rng(seed);
  auto ent = [](int i) { return Term::iri("http://sa.test/e" + std::to_string(i)); };
  for (int g = 0; g < graphs; g++) {
    b.cases++;
    int n = pick(rng, 2, 60);
    int edges = pick(rng, 0, n);
    std::vector<Triple> triples;
    // union-find oracle
    std::vector<int> parent(n);
    for (int i = 0; i < n; i++) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int i = 0; i < edges; i++) {
      int a = pick(rng, 0, n - 1), c = pick(rng, 0, n - 1);
      triples.push_back({ent(a), Term::iri(rdf_ns::same_as), ent(c)});
      parent[find(a)] = find(c);
    }
    // payload triples to rewrite, some via aliased subjects/objects
    int facts = pick(rng, 0, 30);
    for (int i = 0; i < facts; i++) {
      triples.push_back({ent(pick(rng, 0, n - 1)),
                         Term::iri("http://sa.test/p" + std::to_string(pick(rng, 0, 2))),
                         ent(pick(rng, 0, n - 1))});
    }
    std::shuffle(triples.begin(), triples.end(), rng);

    // expected canon: lexicographically least term of each component
    std::map<int, Term> least;
    for (int i = 0; i < n; i++) {
      int r = find(i);
      auto it = least.find(r);
      if (it == least.end() || ent(i) < it->second) least[r] = ent(i);
    }
    SameAsResolution res = resolve_same_as(triples);
    bool ok = true;
    for (int i = 0; i < n; i++) {
      Term want = least.at(find(i));
      // singletons may be absent from the map; canon falls back to identity
      if (res.canon(ent(i)) != want) ok = false;
    }
    if (!ok) {
      b.fail("canonicalization mismatch, graph " + std::to_string(g));
      continue;
    }

    // apply_same_as oracle: rewrite all positions, drop sameAs, dedup
    std::vector<Triple> want;
    std::set<Triple> seen;
    for (const auto& t : triples) {
      if (t.p.is_iri() && t.p.value == rdf_ns::same_as) continue;
      Triple r{res.canon(t.s), res.canon(t.p), res.canon(t.o)};
      if (seen.insert(r).second) want.push_back(r);
    }
    if (apply_same_as(triples, res) != want)
      b.fail("apply_same_as mismatch, graph " + std::to_string(g));
  }
  return b;
}

Battery window_property_battery(uint64_t seed, int cases) {
  Battery b;
  Rng rng(seed);
  for (int k = 0; k < cases; k++) {
    b.cases++;
    int n_events = pick(rng, 0, 40);
    std::vector<GraphEvent> events;
    int64_t ts = pick(rng, 0, 5);
    for (int i = 0; i < n_events; i++) {
      int n = pick(rng, 1, 12);
      std::vector<TimestampedTriple> tts;
      for (int j = 0; j < n; j++) {
        tts.push_back({Triple{Term::iri("http://w.test/s" + std::to_string(pick(rng, 0, 9))),
                              Term::iri("http://w.test/p"),
                              Term::integer(pick(rng, 0, 99))},
                       ts});
      }
      events.push_back(make_graph_event("ev" + std::to_string(i), std::move(tts)));
      ts += pick(rng, 0, 3);
    }
    WindowConfig cfg;
    if (pick(rng, 0, 1) == 0) {
      cfg.kind = WindowKind::Count;
      cfg.max_triples = pick(rng, 1, 20);
    } else {
      cfg.kind = WindowKind::Time;
      cfg.width_ms = pick(rng, 1, 5);
    }

    std::vector<Window> cut = cut_windows(events, cfg);

    StreamWindower sw(cfg);
    std::vector<Window> inc;
    for (const auto& ev : events) {
      for (auto& w : sw.push(ev)) inc.push_back(std::move(w));
    }
    if (auto last = sw.finish()) inc.push_back(std::move(*last));

    auto same_window = [](const Window& a, const Window& c) {
      return a.seq_no == c.seq_no && a.events == c.events && a.triple_count == c.triple_count &&
             a.low_ts == c.low_ts && a.high_ts == c.high_ts;
    };
    if (cut.size() != inc.size() ||
        !std::equal(cut.begin(), cut.end(), inc.begin(), same_window)) {
      b.fail("incremental windower diverged from offline cutter, case " + std::to_string(k));
      continue;
    }

    // conservation + atomicity: concatenation reproduces the input exactly
    std::vector<GraphEvent> flat;
    for (const auto& w : cut) flat.insert(flat.end(), w.events.begin(), w.events.end());
    if (flat != events) {
      b.fail("window concatenation altered the event sequence, case " + std::to_string(k));
      continue;
    }

    int64_t prev_high = -1;
    bool ok = true;
    for (size_t i = 0; i < cut.size(); i++) {
      const Window& w = cut[i];
      if (w.seq_no != i) ok = false;                  // dense numbering
      if (w.events.empty()) ok = false;               // no empty windows
      size_t triples = 0;
      int64_t lo = w.events.front().event_ts, hi = lo;
      for (const auto& ev : w.events) {
        triples += ev.triples.size();
        lo = std::min(lo, ev.event_ts);
        hi = std::max(hi, ev.event_ts);
      }
      if (w.triple_count != triples || w.low_ts != lo || w.high_ts != hi) ok = false;
      if (w.low_ts < prev_high) ok = false;           // monotone bounds
      prev_high = w.high_ts;
      if (cfg.kind == WindowKind::Count) {
        // cap holds unless the window is a single oversize event
        if (w.triple_count > cfg.max_triples &&
            !(w.events.size() == 1 && w.events[0].triples.size() > cfg.max_triples))
          ok = false;
      } else {
        int64_t bucket = w.events.front().event_ts / cfg.width_ms;
        for (const auto& ev : w.events) {
          if (ev.event_ts / cfg.width_ms != bucket) ok = false;
        }
      }
    }
    if (!ok) b.fail("window invariant violated, case " + std::to_string(k));
  }
  return b;
}

Battery bus_exactly_once_battery(uint64_t, int messages, const std::vector<int>& group_sizes,
                                 bool live) {
  Battery b;
  LocalBroker bus;
  const std::string topic = "w";

  std::vector<std::string> payloads;
  payloads.reserve(messages);
  for (int i = 0; i < messages; i++) payloads.push_back("m" + std::to_string(i));

  for (int k : group_sizes) bus.ensure_group(topic, "g" + std::to_string(k));

  std::thread producer;
  if (live) {
    producer = std::thread([&] {
      for (const auto& p : payloads) bus.publish(topic, p);
    });
  } else {
    bus.publish_batch(topic, payloads);
  }

  std::mutex mu;
  std::map<std::string, std::vector<uint64_t>> delivered;  // group -> offsets
  std::vector<std::thread> consumers;
  for (int k : group_sizes) {
    std::string group = "g" + std::to_string(k);
    auto count = std::make_shared<std::atomic<int>>(0);
    for (int c = 0; c < k; c++) {
      consumers.emplace_back([&, group, count, c] {
        auto sub = bus.subscribe(topic, group, "c" + std::to_string(c));
        // deadline so a lost message fails the size check instead of hanging
        auto give_up = std::chrono::steady_clock::now() + std::chrono::seconds(30);
        while (count->load() < messages && std::chrono::steady_clock::now() < give_up) {
          if (auto m = sub->next(50)) {
            sub->ack(m->offset);
            {
              std::lock_guard<std::mutex> lock(mu);
              delivered[group].push_back(m->offset);
            }
            count->fetch_add(1);
          }
        }
      });
    }
  }
  for (auto& t : consumers) t.join();
  if (producer.joinable()) producer.join();

  for (int k : group_sizes) {
    b.cases++;
    auto& offs = delivered["g" + std::to_string(k)];
    std::sort(offs.begin(), offs.end());
    bool ok = int(offs.size()) == messages;
    for (size_t i = 0; ok && i < offs.size(); i++) ok = offs[i] == i;
    if (!ok)
      b.fail("group of " + std::to_string(k) + " saw " + std::to_string(offs.size()) +
             " deliveries (want exactly " + std::to_string(messages) + ", offsets 0..n-1)");
  }
  return b;
}

}  // namespace dscep::testing
