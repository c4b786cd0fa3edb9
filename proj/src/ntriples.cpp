#include "dscep/ntriples.hpp"

#include <cstdio>

#include "dscep/errors.hpp"

namespace dscep {

namespace {

struct Scanner {
  std::string_view in;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw NtParseError(msg, pos); }
  bool eof() const { return pos >= in.size(); }
  char peek() const { return eof() ? '\0' : in[pos]; }
  char take() {
    if (eof()) fail("unexpected end of statement");
    return in[pos++];
  }
  void skip_ws() {
    while (!eof() && (in[pos] == ' ' || in[pos] == '\t')) pos++;
  }

  // Appends one UTF-8 encoded code point.
  static void append_utf8(std::string& out, uint32_t cp) {
    if (cp <= 0x7f) {
      out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7ff) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp <= 0xffff) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }

  uint32_t hex_escape(int digits) {
    uint32_t cp = 0;
    for (int i = 0; i < digits; i++) {
      char c = take();
      cp <<= 4;
      if (c >= '0' && c <= '9')
        cp |= static_cast<uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f')
        cp |= static_cast<uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F')
        cp |= static_cast<uint32_t>(c - 'A' + 10);
      else {
        pos--;
        fail("bad hex digit in escape");
      }
    }
    return cp;
  }

  std::string iri_ref() {
    if (take() != '<') {
      pos--;
      fail("expected '<'");
    }
    std::string out;
    for (;;) {
      char c = take();
      if (c == '>') break;
      if (c == ' ' || c == '\t' || c == '\n') {
        pos--;
        fail("whitespace inside iri");
      }
      out.push_back(c);
    }
    if (out.empty()) fail("empty iri");
    return out;
  }

  std::string blank_label() {
    if (take() != '_' || take() != ':') {
      fail("expected '_:'");
    }
    std::string out;
    while (!eof()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.') {
        out.push_back(c);
        pos++;
      } else {
        break;
      }
    }
    if (out.empty()) fail("empty blank node label");
    return out;
  }

  std::string quoted_string() {
    if (take() != '"') {
      pos--;
      fail("expected '\"'");
    }
    std::string out;
    for (;;) {
      char c = take();
      if (c == '"') break;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      char esc = take();
      switch (esc) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'u': append_utf8(out, hex_escape(4)); break;
        case 'U': append_utf8(out, hex_escape(8)); break;
        default:
          pos--;
          fail("unknown string escape");
      }
    }
    return out;
  }

  Term subject_or_object(bool allow_literal) {
    skip_ws();
    char c = peek();
    if (c == '<') return Term::iri(iri_ref());
    if (c == '_') return Term::blank(blank_label());
    if (c == '"') {
      if (!allow_literal) fail("literal not allowed here");
      std::string lex = quoted_string();
      if (peek() == '^') {
        take();
        if (take() != '^') {
          pos--;
          fail("expected '^^'");
        }
        return Term::literal(std::move(lex), iri_ref());
      }
      if (peek() == '@') {
        take();
        std::string lang;
        while (!eof() &&
               (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-')) {
          lang.push_back(take());
        }
        if (lang.empty()) fail("empty language tag");
        return Term::literal(std::move(lex), "", std::move(lang));
      }
      return Term::literal(std::move(lex));
    }
    fail("expected iri, blank node or literal");
  }
};

void escape_into(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
}

}  // namespace

Triple parse_ntriple(std::string_view line) {
  Scanner sc{line};
  Triple t;
  t.s = sc.subject_or_object(false);
  sc.skip_ws();
  if (sc.peek() != '<') sc.fail("predicate must be an iri");
  t.p = Term::iri(sc.iri_ref());
  t.o = sc.subject_or_object(true);
  sc.skip_ws();
  if (sc.take() != '.') {
    sc.pos--;
    sc.fail("expected '.' terminator");
  }
  sc.skip_ws();
  if (!sc.eof()) sc.fail("trailing characters after '.'");
  return t;
}

std::vector<Triple> parse_ntriples(std::string_view text) {
  std::vector<Triple> out;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    line_no++;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) i++;
    if (i < line.size() && line[i] != '#') {
      try {
        out.push_back(parse_ntriple(line));
      } catch (const NtParseError& e) {
        throw NtParseError("line " + std::to_string(line_no) + ": " + e.what(), e.offset);
      }
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::string serialize_term(const Term& t) {
  std::string out;
  switch (t.kind) {
    case TermKind::Iri:
      out.push_back('<');
      out += t.value;
      out.push_back('>');
      break;
    case TermKind::Blank:
      out += "_:";
      out += t.value;
      break;
    case TermKind::Literal:
      out.push_back('"');
      escape_into(out, t.value);
      out.push_back('"');
      if (!t.lang.empty()) {
        out.push_back('@');
        out += t.lang;
      } else if (!t.datatype.empty()) {
        out += "^^<";
        out += t.datatype;
        out.push_back('>');
      }
      break;
  }
  return out;
}

std::string serialize_ntriple(const Triple& t) {
  return serialize_term(t.s) + " " + serialize_term(t.p) + " " + serialize_term(t.o) + " .";
}

std::string serialize_ntriples(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += serialize_ntriple(t);
    out.push_back('\n');
  }
  return out;
}

}  // namespace dscep
