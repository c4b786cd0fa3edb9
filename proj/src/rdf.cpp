#include "dscep/rdf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace dscep {

namespace xsd {
bool is_numeric(const std::string& dt) {
  return dt == integer_iri || dt == double_iri || dt == decimal_iri || dt == float_iri ||
         dt == long_iri || dt == int_iri;
}
}  // namespace xsd

Term Term::iri(std::string v) {
  if (v.empty()) throw std::invalid_argument("iri value must be non-empty");
  for (char c : v)
    if (std::isspace(static_cast<unsigned char>(c)))
      throw std::invalid_argument("iri value must not contain whitespace: " + v);
  Term t;
  t.kind = TermKind::Iri;
  t.value = std::move(v);
  return t;
}

Term Term::blank(std::string label) {
  if (label.empty()) throw std::invalid_argument("blank label must be non-empty");
  Term t;
  t.kind = TermKind::Blank;
  t.value = std::move(label);
  return t;
}

Term Term::literal(std::string lexical, std::string datatype, std::string lang) {
  if (!datatype.empty() && !lang.empty())
    throw std::invalid_argument("literal cannot carry both datatype and lang");
  if (datatype == xsd::string_iri) datatype.clear();  // canonical form
  Term t;
  t.kind = TermKind::Literal;
  t.value = std::move(lexical);
  t.datatype = std::move(datatype);
  t.lang = std::move(lang);
  return t;
}

Term Term::typed(std::string lexical, const std::string& datatype_iri) {
  return literal(std::move(lexical), datatype_iri);
}

Term Term::integer(int64_t v) { return literal(std::to_string(v), xsd::integer_iri); }

Term Term::number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::invalid_argument("unprintable double");
  return literal(std::string(buf, end), xsd::double_iri);
}

std::string Term::effective_datatype() const {
  if (!is_literal() || !lang.empty()) return datatype;
  return datatype.empty() ? xsd::string_iri : datatype;
}

std::optional<double> Term::numeric_value() const {
  if (!is_numeric()) return std::nullopt;
  const char* b = value.data();
  const char* e = b + value.size();
  double out = 0;
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || ptr != e) return std::nullopt;  // bad lexical form
  return out;
}

GraphEvent make_graph_event(std::string graph_id, std::vector<TimestampedTriple> triples) {
  if (triples.empty()) throw std::invalid_argument("graph event must carry at least one triple");
  int64_t max_ts = 0;
  bool first = true;
  for (const auto& tt : triples) {
    if (tt.ts < 0) throw std::invalid_argument("triple ts must be >= 0");
    max_ts = first ? tt.ts : std::max(max_ts, tt.ts);
    first = false;
  }
  GraphEvent ev;
  ev.graph_id = std::move(graph_id);
  ev.triples = std::move(triples);
  ev.event_ts = max_ts;
  return ev;
}

int64_t event_ts(const Event& ev) {
  if (const auto* t = std::get_if<TimestampedTriple>(&ev)) return t->ts;
  return std::get<GraphEvent>(ev).event_ts;
}

size_t event_triple_count(const Event& ev) {
  if (std::holds_alternative<TimestampedTriple>(ev)) return 1;
  return std::get<GraphEvent>(ev).triples.size();
}

static size_t hash_mix(size_t seed, size_t v) {
  // boost::hash_combine formula
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

size_t hash_term(const Term& t) {
  std::hash<std::string> h;
  size_t seed = static_cast<size_t>(t.kind);
  seed = hash_mix(seed, h(t.value));
  seed = hash_mix(seed, h(t.datatype));
  seed = hash_mix(seed, h(t.lang));
  return seed;
}

size_t hash_triple(const Triple& t) {
  size_t seed = hash_term(t.s);
  seed = hash_mix(seed, hash_term(t.p));
  seed = hash_mix(seed, hash_term(t.o));
  return seed;
}

}  // namespace dscep
