#include "dscep/store.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dscep/errors.hpp"
#include "dscep/ntriples.hpp"

namespace dscep {

SameAsResolution resolve_same_as(const std::vector<Triple>& triples) {
  // Undirected adjacency over the sameAs edges, then BFS component labeling;
  // the representative is the least member so the choice is input-order free.
  std::unordered_map<Term, std::vector<Term>> adj;
  for (const auto& t : triples) {
    if (t.p.is_iri() && t.p.value == rdf_ns::same_as) {
      adj[t.s].push_back(t.o);
      adj[t.o].push_back(t.s);
    }
  }
  SameAsResolution res;
  std::unordered_set<Term> seen;
  for (const auto& [start, _] : adj) {
    if (seen.count(start)) continue;
    std::vector<Term> comp;
    std::deque<Term> q{start};
    seen.insert(start);
    while (!q.empty()) {
      Term cur = q.front();
      q.pop_front();
      comp.push_back(cur);
      for (const auto& nb : adj[cur]) {
        if (seen.insert(nb).second) q.push_back(nb);
      }
    }
    const Term& least = *std::min_element(comp.begin(), comp.end());
    for (const auto& m : comp) res.rep.emplace(m, least);
  }
  return res;
}

std::vector<Triple> apply_same_as(const std::vector<Triple>& triples, const SameAsResolution& r) {
  std::vector<Triple> out;
  out.reserve(triples.size());
  std::unordered_set<Triple> seen;
  for (const auto& t : triples) {
    if (t.p.is_iri() && t.p.value == rdf_ns::same_as) continue;
    Triple c{r.canon(t.s), r.canon(t.p), r.canon(t.o)};
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

TripleStore TripleStore::from_triples(std::vector<Triple> triples, bool canonicalize) {
  if (canonicalize) {
    SameAsResolution res = resolve_same_as(triples);
    triples = apply_same_as(triples, res);
  }
  TripleStore st;
  st.triples_.reserve(triples.size());
  std::unordered_set<Triple> seen;
  seen.reserve(triples.size() * 2);
  for (auto& t : triples) {
    if (seen.insert(t).second) st.triples_.push_back(std::move(t));
  }
  st.build_indexes();
  st.build_subclass_closure();
  return st;
}

TripleStore TripleStore::load_text(std::string_view text, bool canonicalize) {
  std::vector<Triple> triples = parse_ntriples(text);
  for (auto& t : triples) {
    // Document-scoped blank labels get a store prefix; the same label still
    // names the same node within this load.
    for (Term* term : {&t.s, &t.o}) {
      if (term->is_blank()) term->value = "kb." + term->value;
    }
  }
  return from_triples(std::move(triples), canonicalize);
}

TripleStore TripleStore::load_file(const std::string& path, bool canonicalize) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open kb file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_text(buf.str(), canonicalize);
}

namespace {

// Component accessors by index kind, used for the shared prefix search.
using Key = std::array<const Term*, 3>;

Key key_of(const Triple& t, int ix) {
  switch (ix) {
    case 0: return {&t.s, &t.p, &t.o};   // spo
    case 1: return {&t.p, &t.o, &t.s};   // pos
    default: return {&t.o, &t.s, &t.p};  // osp
  }
}

}  // namespace

void TripleStore::build_indexes() {
  auto fill = [&](std::vector<uint32_t>& ids, int ix) {
    ids.resize(triples_.size());
    for (uint32_t i = 0; i < ids.size(); i++) ids[i] = i;
    std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
      Key ka = key_of(triples_[a], ix), kb = key_of(triples_[b], ix);
      for (int i = 0; i < 3; i++) {
        if (*ka[i] != *kb[i]) return *ka[i] < *kb[i];
      }
      return false;
    });
  };
  fill(spo_, 0);
  fill(pos_, 1);
  fill(osp_, 2);
}

bool TripleStore::contains(const Triple& t) const {
  TriplePattern pat{t.s, t.p, t.o};
  return !match(pat).empty();
}

std::vector<Triple> TripleStore::match(const TriplePattern& pat) const {
  // Pick the index whose ordering puts all bound positions in a prefix.
  const std::vector<uint32_t>* ids = nullptr;
  int ix = 0;
  std::vector<const Term*> prefix;
  if (pat.s) {
    if (pat.p) {
      ids = &spo_, ix = 0;
      prefix = {&*pat.s, &*pat.p};
      if (pat.o) prefix.push_back(&*pat.o);
    } else if (pat.o) {
      ids = &osp_, ix = 2;
      prefix = {&*pat.o, &*pat.s};
    } else {
      ids = &spo_, ix = 0;
      prefix = {&*pat.s};
    }
  } else if (pat.p) {
    ids = &pos_, ix = 1;
    prefix = {&*pat.p};
    if (pat.o) prefix.push_back(&*pat.o);
  } else if (pat.o) {
    ids = &osp_, ix = 2;
    prefix = {&*pat.o};
  } else {
    return triples_;  // full scan
  }

  auto cmp_lt = [&](uint32_t id, int upto) {
    // triples_[id] < prefix on the first `upto` key components
    Key k = key_of(triples_[id], ix);
    for (int i = 0; i < upto; i++) {
      if (*k[i] != *prefix[i]) return *k[i] < *prefix[i];
    }
    return false;
  };
  int n = static_cast<int>(prefix.size());
  auto lo = std::lower_bound(ids->begin(), ids->end(), 0u,
                             [&](uint32_t id, uint32_t) { return cmp_lt(id, n); });
  std::vector<Triple> out;
  for (auto it = lo; it != ids->end(); ++it) {
    Key k = key_of(triples_[*it], ix);
    bool eq = true;
    for (int i = 0; i < n; i++) {
      if (*k[i] != *prefix[i]) {
        eq = false;
        break;
      }
    }
    if (!eq) break;
    out.push_back(triples_[*it]);
  }
  return out;
}

void TripleStore::build_subclass_closure() {
  // Tarjan SCC over subClassOf edges, then descendant sets on the condensed
  // DAG: cone(c) = every class whose chain reaches c, including c itself.
  std::vector<Term> nodes;
  std::unordered_map<Term, int> node_id;
  auto intern = [&](const Term& t) {
    auto [it, fresh] = node_id.emplace(t, static_cast<int>(nodes.size()));
    if (fresh) nodes.push_back(t);
    return it->second;
  };
  std::vector<std::pair<int, int>> edges;  // child -> parent
  for (const auto& t : triples_) {
    if (t.p.is_iri() && t.p.value == rdf_ns::sub_class_of) {
      int c = intern(t.s), p = intern(t.o);
      edges.emplace_back(c, p);
      parents_[t.s].push_back(t.o);
    }
  }
  int n = static_cast<int>(nodes.size());
  if (n == 0) return;
  std::vector<std::vector<int>> up(n);  // child -> parents
  for (auto [c, p] : edges) up[c].push_back(p);

  // Iterative Tarjan.
  std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_idx = 0, ncomp = 0;
  struct Frame {
    int v;
    size_t child;
  };
  for (int root = 0; root < n; root++) {
    if (idx[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    while (!call.empty()) {
      Frame& f = call.back();
      int v = f.v;
      if (f.child == 0) {
        idx[v] = low[v] = next_idx++;
        stack.push_back(v);
        on_stack[v] = true;
      }
      if (f.child < up[v].size()) {
        int w = up[v][f.child++];
        if (idx[w] == -1) {
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], idx[w]);
        }
      } else {
        if (low[v] == idx[v]) {
          while (true) {
            int w = stack.back();
            stack.pop_back();
            on_stack[w] = false;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ncomp++;
        }
        call.pop_back();
        if (!call.empty()) {
          int parent = call.back().v;
          low[parent] = std::min(low[parent], low[v]);
        }
      }
    }
  }

  // Condensed downward adjacency (parent comp -> child comps) and members.
  std::vector<std::vector<int>> comp_members(ncomp), down(ncomp);
  for (int v = 0; v < n; v++) comp_members[comp[v]].push_back(v);
  for (auto [c, p] : edges) {
    if (comp[c] != comp[p]) down[comp[p]].push_back(comp[c]);
  }

  // Descendant comp sets. Tarjan completes ancestor components first (DFS
  // follows child->parent edges), so a parent comp always has a smaller id
  // than its children and descendants can be accumulated largest-id first.
  std::vector<std::vector<int>> desc(ncomp);
  for (int c = ncomp - 1; c >= 0; c--) {
    std::unordered_set<int> acc{c};
    for (int ch : down[c]) {
      acc.insert(ch);
      for (int d : desc[ch]) acc.insert(d);
    }
    desc[c].assign(acc.begin(), acc.end());
  }

  for (int v = 0; v < n; v++) {
    std::vector<Term> cone;
    for (int dc : desc[comp[v]])
      for (int m : comp_members[dc]) cone.push_back(nodes[m]);
    std::sort(cone.begin(), cone.end());
    cone_.emplace(nodes[v], std::move(cone));
  }
  for (auto& [c, ps] : parents_) {
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  }
}

std::vector<Term> TripleStore::subclasses_of(const Term& c) const {
  auto it = cone_.find(c);
  if (it == cone_.end()) return {c};
  return it->second;
}

bool TripleStore::is_subclass(const Term& sub, const Term& super) const {
  if (sub == super) return true;
  auto it = cone_.find(super);
  if (it == cone_.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), sub);
}

const std::vector<Term>* TripleStore::direct_superclasses(const Term& c) const {
  auto it = parents_.find(c);
  return it == parents_.end() ? nullptr : &it->second;
}

std::string TripleStore::to_ntriples() const { return serialize_ntriples(triples_); }

}  // namespace dscep
