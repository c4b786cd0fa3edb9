#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dscep {

// Lexical error in N-Triples input; offset is the byte position in the input.
struct NtParseError : std::runtime_error {
  size_t offset;
  NtParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Malformed JSON event payload; field names the missing or broken member.
struct DecodeError : std::runtime_error {
  std::string field;
  DecodeError(const std::string& msg, std::string fld)
      : std::runtime_error(msg), field(std::move(fld)) {}
};

// Query text rejected; line/col are 1-based positions in the query source.
struct QuerySyntaxError : std::runtime_error {
  int line, col;
  QuerySyntaxError(const std::string& msg, int l, int c)
      : std::runtime_error("query error at " + std::to_string(l) + ":" + std::to_string(c) +
                           ": " + msg),
        line(l),
        col(c) {}
};

// Evaluation failure; endpoint is set when a SERVICE call is involved.
struct EvalError : std::runtime_error {
  std::string endpoint;
  explicit EvalError(const std::string& msg, std::string ep = "")
      : std::runtime_error(msg), endpoint(std::move(ep)) {}
};

struct BusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dscep
