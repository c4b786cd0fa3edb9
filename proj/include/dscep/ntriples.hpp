#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dscep/rdf.hpp"

namespace dscep {

// Parses one N-Triples statement: subject predicate object '.'.
// Supported object forms: <iri>, _:label, "literal", "lit"^^<dt>, "lit"@lang.
// String escapes: \" \\ \n \t \r \uXXXX \UXXXXXXXX. Throws NtParseError with
// the byte offset of the offending character.
Triple parse_ntriple(std::string_view line);

// One statement per line, '#' comment lines and blank lines skipped.
// Errors are rethrown with the 1-based line number prepended.
std::vector<Triple> parse_ntriples(std::string_view text);

std::string serialize_term(const Term& t);
// Round-trip: parse_ntriple(serialize_ntriple(t)) == t.
std::string serialize_ntriple(const Triple& t);
std::string serialize_ntriples(const std::vector<Triple>& triples);

}  // namespace dscep
