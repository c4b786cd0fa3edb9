#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "dscep/rdf.hpp"

namespace dscep {

// JSON wire format, one object per bus message.
//
// Triple event:  {"s":{"k":"iri","v":"..."},"p":{...},"o":{...},"ts":123}
// Graph event:   {"graph":"<id>","ets":123,"triples":[ ...triple events... ]}
// Term kinds:    k in {"iri","bnode","lit"}; literals may carry "dt" / "lang".
//
// Decoding ignores unknown fields. A missing required field raises DecodeError
// naming the field. A carried "ets" that differs from the max member ts raises
// DecodeError("event_ts mismatch").

nlohmann::json term_to_json(const Term& t);
Term term_from_json(const nlohmann::json& j);

nlohmann::json event_to_json(const Event& ev);
Event event_from_json(const nlohmann::json& j);

std::string encode_event(const Event& ev);
Event decode_event(std::string_view bytes);

// Control marker published after the last event of a stream.
inline const std::string kEosPayload = "{\"op\":\"eos\"}";
bool is_eos_payload(std::string_view bytes);

}  // namespace dscep
