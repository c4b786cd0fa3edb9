#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dscep/rdf.hpp"

namespace dscep {

// Store-level lookup pattern; nullopt positions are wildcards.
struct TriplePattern {
  std::optional<Term> s, p, o;
};

// Maps each term in a sameAs component to the lexicographically least member.
struct SameAsResolution {
  std::unordered_map<Term, Term> rep;
  const Term& canon(const Term& t) const {
    auto it = rep.find(t);
    return it == rep.end() ? t : it->second;
  }
};

// Connected components over owl:sameAs edges (direction ignored).
SameAsResolution resolve_same_as(const std::vector<Triple>& triples);

// Rewrites all positions through the resolution, drops the sameAs triples
// themselves and deduplicates, keeping first-occurrence order.
std::vector<Triple> apply_same_as(const std::vector<Triple>& triples, const SameAsResolution& r);

// Immutable indexed triple set. Three permutation indexes (spo, pos, osp)
// answer any bound-prefix lookup; the rdfs:subClassOf closure is materialized
// eagerly and tolerates cycles (SCC condensation).
class TripleStore {
 public:
  TripleStore() = default;

  // canonicalize applies sameAs smushing before indexing.
  static TripleStore from_triples(std::vector<Triple> triples, bool canonicalize = false);
  // Parses N-Triples text; blank labels are renamed with a "kb." prefix so
  // they can never collide with stream-scoped blanks.
  static TripleStore load_text(std::string_view text, bool canonicalize = false);
  static TripleStore load_file(const std::string& path, bool canonicalize = false);

  size_t size() const { return triples_.size(); }
  const std::vector<Triple>& triples() const { return triples_; }
  bool contains(const Triple& t) const;

  // Matching triples in deterministic (index) order.
  std::vector<Triple> match(const TriplePattern& pat) const;

  // Reflexive-transitive closure below c: {c} plus every class reachable to c
  // via subClassOf chains. Sorted; classes absent from the schema yield {c}.
  std::vector<Term> subclasses_of(const Term& c) const;
  bool is_subclass(const Term& sub, const Term& super) const;

  // Direct superclasses of c per the raw subClassOf edges (empty if none).
  const std::vector<Term>* direct_superclasses(const Term& c) const;

  std::string to_ntriples() const;

 private:
  void build_indexes();
  void build_subclass_closure();

  std::vector<Triple> triples_;                      // deduped, insertion order
  std::vector<uint32_t> spo_, pos_, osp_;            // id permutations
  std::unordered_map<Term, std::vector<Term>> cone_;     // class -> sorted closure incl. self
  std::unordered_map<Term, std::vector<Term>> parents_;  // class -> direct superclasses
};

}  // namespace dscep
