#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dscep {

namespace xsd {
inline const std::string string_iri = "http://www.w3.org/2001/XMLSchema#string";
inline const std::string integer_iri = "http://www.w3.org/2001/XMLSchema#integer";
inline const std::string double_iri = "http://www.w3.org/2001/XMLSchema#double";
inline const std::string decimal_iri = "http://www.w3.org/2001/XMLSchema#decimal";
inline const std::string float_iri = "http://www.w3.org/2001/XMLSchema#float";
inline const std::string long_iri = "http://www.w3.org/2001/XMLSchema#long";
inline const std::string int_iri = "http://www.w3.org/2001/XMLSchema#int";
bool is_numeric(const std::string& datatype_iri);
}  // namespace xsd

namespace rdf_ns {
inline const std::string type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline const std::string sub_class_of = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
inline const std::string same_as = "http://www.w3.org/2002/07/owl#sameAs";
}  // namespace rdf_ns

enum class TermKind : uint8_t { Iri = 0, Blank = 1, Literal = 2 };

// One RDF term. For literals, empty datatype means xsd:string (the explicit
// form is normalized away so both spellings compare equal); lang implies a
// plain language-tagged string. Field order drives the total order:
// iri < blank < literal, then value/datatype/lang lexicographically.
struct Term {
  TermKind kind = TermKind::Iri;
  std::string value;
  std::string datatype;  // literals only
  std::string lang;      // literals only

  static Term iri(std::string v);
  static Term blank(std::string label);
  static Term literal(std::string lexical, std::string datatype = "", std::string lang = "");
  static Term typed(std::string lexical, const std::string& datatype_iri);
  static Term integer(int64_t v);
  static Term number(double v);  // shortest round-trip xsd:double literal

  bool is_iri() const { return kind == TermKind::Iri; }
  bool is_blank() const { return kind == TermKind::Blank; }
  bool is_literal() const { return kind == TermKind::Literal; }
  bool is_numeric() const { return is_literal() && lang.empty() && xsd::is_numeric(effective_datatype()); }
  // Empty-datatype literals report xsd:string.
  std::string effective_datatype() const;
  std::optional<double> numeric_value() const;

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Triple {
  Term s, p, o;
  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

// ts is epoch milliseconds, always >= 0.
struct TimestampedTriple {
  Triple triple;
  int64_t ts = 0;
  auto operator<=>(const TimestampedTriple&) const = default;
  bool operator==(const TimestampedTriple&) const = default;
};

// Atomic unit on a stream: a named batch of timestamped triples.
// event_ts is derived, always the max member ts. Blank labels are scoped to
// the event that carries them.
struct GraphEvent {
  std::string graph_id;
  std::vector<TimestampedTriple> triples;
  int64_t event_ts = 0;

  size_t triple_count() const { return triples.size(); }
  bool operator==(const GraphEvent&) const = default;
};

// Throws std::invalid_argument on empty triple list or negative ts.
GraphEvent make_graph_event(std::string graph_id, std::vector<TimestampedTriple> triples);

using Event = std::variant<TimestampedTriple, GraphEvent>;

int64_t event_ts(const Event& ev);
size_t event_triple_count(const Event& ev);

size_t hash_term(const Term& t);
size_t hash_triple(const Triple& t);

}  // namespace dscep

template <>
struct std::hash<dscep::Term> {
  size_t operator()(const dscep::Term& t) const { return dscep::hash_term(t); }
};
template <>
struct std::hash<dscep::Triple> {
  size_t operator()(const dscep::Triple& t) const { return dscep::hash_triple(t); }
};
