#include "dscep/wire.hpp"

#include "dscep/errors.hpp"

namespace dscep {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw DecodeError(std::string("missing field: ") + field, field);
  return *it;
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw DecodeError(std::string("field must be a string: ") + field, field);
  return v.get<std::string>();
}

int64_t require_ts(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_integer())
    throw DecodeError(std::string("field must be an integer: ") + field, field);
  int64_t ts = v.get<int64_t>();
  if (ts < 0) throw DecodeError(std::string("timestamp must be >= 0: ") + field, field);
  return ts;
}

TimestampedTriple triple_event_from_json(const json& j) {
  TimestampedTriple tt;
  tt.triple.s = term_from_json(require(j, "s"));
  tt.triple.p = term_from_json(require(j, "p"));
  tt.triple.o = term_from_json(require(j, "o"));
  tt.ts = require_ts(j, "ts");
  return tt;
}

json triple_event_to_json(const TimestampedTriple& tt) {
  return json{{"s", term_to_json(tt.triple.s)},
              {"p", term_to_json(tt.triple.p)},
              {"o", term_to_json(tt.triple.o)},
              {"ts", tt.ts}};
}

}  // namespace

json term_to_json(const Term& t) {
  json j;
  switch (t.kind) {
    case TermKind::Iri: j["k"] = "iri"; break;
    case TermKind::Blank: j["k"] = "bnode"; break;
    case TermKind::Literal: j["k"] = "lit"; break;
  }
  j["v"] = t.value;
  if (!t.datatype.empty()) j["dt"] = t.datatype;
  if (!t.lang.empty()) j["lang"] = t.lang;
  return j;
}

Term term_from_json(const json& j) {
  if (!j.is_object()) throw DecodeError("term must be an object", "k");
  std::string k = require_string(j, "k");
  std::string v = require_string(j, "v");
  try {
    if (k == "iri") return Term::iri(std::move(v));
    if (k == "bnode") return Term::blank(std::move(v));
    if (k == "lit") {
      std::string dt = j.contains("dt") ? j["dt"].get<std::string>() : "";
      std::string lang = j.contains("lang") ? j["lang"].get<std::string>() : "";
      return Term::literal(std::move(v), std::move(dt), std::move(lang));
    }
  } catch (const std::invalid_argument& e) {
    throw DecodeError(e.what(), "v");
  }
  throw DecodeError("unknown term kind: " + k, "k");
}

json event_to_json(const Event& ev) {
  if (const auto* tt = std::get_if<TimestampedTriple>(&ev)) return triple_event_to_json(*tt);
  const auto& ge = std::get<GraphEvent>(ev);
  json triples = json::array();
  for (const auto& tt : ge.triples) triples.push_back(triple_event_to_json(tt));
  return json{{"graph", ge.graph_id}, {"ets", ge.event_ts}, {"triples", std::move(triples)}};
}

Event event_from_json(const json& j) {
  if (!j.is_object()) throw DecodeError("event must be an object", "");
  if (j.contains("graph")) {
    std::string graph_id = require_string(j, "graph");
    const json& triples = require(j, "triples");
    if (!triples.is_array() || triples.empty())
      throw DecodeError("graph event needs a non-empty triples array", "triples");
    std::vector<TimestampedTriple> tts;
    tts.reserve(triples.size());
    for (const auto& t : triples) tts.push_back(triple_event_from_json(t));
    GraphEvent ge = make_graph_event(std::move(graph_id), std::move(tts));
    // "ets" is redundant on the wire; when carried it must agree.
    if (j.contains("ets")) {
      int64_t carried = require_ts(j, "ets");
      if (carried != ge.event_ts) throw DecodeError("event_ts mismatch", "ets");
    }
    return ge;
  }
  return triple_event_from_json(j);
}

std::string encode_event(const Event& ev) { return event_to_json(ev).dump(); }

Event decode_event(std::string_view bytes) {
  json j = json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw DecodeError("payload is not valid json", "");
  return event_from_json(j);
}

bool is_eos_payload(std::string_view bytes) {
  json j = json::parse(bytes, nullptr, false);
  return j.is_object() && j.contains("op") && j["op"].is_string() &&
         j["op"].get<std::string>() == "eos";
}

}  // namespace dscep
