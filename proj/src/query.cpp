#include "dscep/query.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "dscep/errors.hpp"

namespace dscep {

bool is_var(const PatternTerm& pt) { return std::holds_alternative<Var>(pt); }
const Var* as_var(const PatternTerm& pt) { return std::get_if<Var>(&pt); }
const Term* as_term(const PatternTerm& pt) { return std::get_if<Term>(&pt); }

PatternExprPtr make_bgp(std::vector<PatternTriple> patterns) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Bgp;
  e->patterns = std::move(patterns);
  return e;
}
PatternExprPtr make_path(PatternPath p) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Path;
  e->path = std::move(p);
  return e;
}
PatternExprPtr make_join(PatternExprPtr a, PatternExprPtr b) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Join;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
PatternExprPtr make_filter(FilterExpr f, PatternExprPtr child) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Filter;
  e->filter = std::move(f);
  e->a = std::move(child);
  return e;
}
PatternExprPtr make_optional(PatternExprPtr left, PatternExprPtr right) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Optional;
  e->a = std::move(left);
  e->b = std::move(right);
  return e;
}
PatternExprPtr make_union(PatternExprPtr a, PatternExprPtr b) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Union;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
PatternExprPtr make_service(std::string endpoint, std::vector<ServiceItem> items) {
  auto e = std::make_shared<PatternExpr>();
  e->kind = PatternExpr::Kind::Service;
  e->endpoint = std::move(endpoint);
  e->service_items = std::move(items);
  return e;
}

bool filter_equal(const FilterExpr& x, const FilterExpr& y) {
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case FilterExpr::Kind::Cmp: return x.cmp == y.cmp;
    case FilterExpr::Kind::Not: return filter_equal(*x.a, *y.a);
    default: return filter_equal(*x.a, *y.a) && filter_equal(*x.b, *y.b);
  }
}

bool pattern_equal(const PatternExpr& x, const PatternExpr& y) {
  if (x.kind != y.kind) return false;
  using K = PatternExpr::Kind;
  switch (x.kind) {
    case K::Bgp: return x.patterns == y.patterns;
    case K::Path: return x.path == y.path;
    case K::Filter: return filter_equal(x.filter, y.filter) && pattern_equal(*x.a, *y.a);
    case K::Optional:
    case K::Union:
    case K::Join: return pattern_equal(*x.a, *y.a) && pattern_equal(*x.b, *y.b);
    case K::Service: return x.endpoint == y.endpoint && x.service_items == y.service_items;
  }
  return false;
}

bool query_equal(const Query& x, const Query& y) {
  return x.form == y.form && x.select_vars == y.select_vars &&
         x.construct_template == y.construct_template && x.aggregates == y.aggregates &&
         x.group_by == y.group_by && x.has_group_by == y.has_group_by &&
         pattern_equal(*x.body, *y.body);
}

// ---------------------------------------------------------------- tokenizer

namespace {

enum class Tok {
  Eof,
  Iri,      // <...>
  Pname,    // prefix:local (text carries both parts)
  Name,     // bare keyword / 'a'
  Variable, // ?x
  String,   // quoted literal (value unescaped; dt/lang handled by parser)
  Number,
  LBrace, RBrace, LParen, RParen,
  Dot, Slash, Star, Plus,
  Eq, Ne, Lt, Le, Gt, Ge,
  AndAnd, OrOr, Bang,
  DtMarker,  // ^^
  At,        // @
};

struct Token {
  Tok kind = Tok::Eof;
  std::string text;
  int line = 1, col = 1;
};

struct Lexer {
  std::string_view in;
  size_t pos = 0;
  int line = 1, col = 1;

  [[noreturn]] void fail(const std::string& msg) const { throw QuerySyntaxError(msg, line, col); }

  char peek(size_t ahead = 0) const {
    return pos + ahead < in.size() ? in[pos + ahead] : '\0';
  }
  void advance() {
    if (pos < in.size()) {
      if (in[pos] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
      pos++;
    }
  }
  void skip_ws() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (peek() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  static bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  Token next() {
    skip_ws();
    Token t;
    t.line = line;
    t.col = col;
    char c = peek();
    if (c == '\0') return t;

    auto single = [&](Tok k) {
      advance();
      t.kind = k;
      return t;
    };

    switch (c) {
      case '{': return single(Tok::LBrace);
      case '}': return single(Tok::RBrace);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      case '/': return single(Tok::Slash);
      case '*': return single(Tok::Star);
      case '=': return single(Tok::Eq);
      case '@': return single(Tok::At);
      case '.':
        if (std::isdigit(static_cast<unsigned char>(peek(1)))) break;  // .5 number
        return single(Tok::Dot);
      case '+':
        if (std::isdigit(static_cast<unsigned char>(peek(1)))) break;
        return single(Tok::Plus);
      case '!':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ne;
        } else {
          t.kind = Tok::Bang;
        }
        return t;
      case '<':
        // IRIREF unless it reads as a comparison; '< ' / '<=' are operators.
        if (peek(1) == '=') {
          advance();
          advance();
          t.kind = Tok::Le;
          return t;
        }
        if (peek(1) == ' ' || peek(1) == '\t' || peek(1) == '\n' || peek(1) == '?' ||
            peek(1) == '"' || peek(1) == '\0') {
          advance();
          t.kind = Tok::Lt;
          return t;
        }
        return iri_ref();
      case '>':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ge;
        } else {
          t.kind = Tok::Gt;
        }
        return t;
      case '&':
        advance();
        if (peek() != '&') fail("expected '&&'");
        advance();
        t.kind = Tok::AndAnd;
        return t;
      case '|':
        advance();
        if (peek() != '|') fail("expected '||'");
        advance();
        t.kind = Tok::OrOr;
        return t;
      case '^':
        advance();
        if (peek() != '^') fail("expected '^^'");
        advance();
        t.kind = Tok::DtMarker;
        return t;
      case '?': {
        advance();
        std::string name;
        while (name_char(peek())) {
          name.push_back(peek());
          advance();
        }
        if (name.empty()) fail("empty variable name");
        t.kind = Tok::Variable;
        t.text = std::move(name);
        return t;
      }
      case '"': return quoted();
      default: break;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+' || c == '.') && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      return number();
    }
    if (name_start(c)) return name_or_pname();
    fail(std::string("unexpected character '") + c + "'");
  }

  Token iri_ref() {
    Token t;
    t.line = line;
    t.col = col;
    advance();  // '<'
    std::string v;
    while (peek() && peek() != '>') {
      if (peek() == ' ' || peek() == '\n') fail("whitespace inside iri");
      v.push_back(peek());
      advance();
    }
    if (peek() != '>') fail("unterminated iri");
    if (v.empty()) fail("empty iri");
    advance();
    t.kind = Tok::Iri;
    t.text = std::move(v);
    return t;
  }

  Token quoted() {
    Token t;
    t.line = line;
    t.col = col;
    advance();  // '"'
    std::string v;
    for (;;) {
      char c = peek();
      if (c == '\0' || c == '\n') fail("unterminated string literal");
      advance();
      if (c == '"') break;
      if (c != '\\') {
        v.push_back(c);
        continue;
      }
      char esc = peek();
      advance();
      switch (esc) {
        case '"': v.push_back('"'); break;
        case '\\': v.push_back('\\'); break;
        case 'n': v.push_back('\n'); break;
        case 't': v.push_back('\t'); break;
        case 'r': v.push_back('\r'); break;
        default: fail("unknown string escape");
      }
    }
    t.kind = Tok::String;
    t.text = std::move(v);
    return t;
  }

  Token number() {
    Token t;
    t.line = line;
    t.col = col;
    std::string v;
    if (peek() == '-' || peek() == '+') {
      v.push_back(peek());
      advance();
    }
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v.push_back(peek());
      advance();
    }
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      v.push_back('.');
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v.push_back(peek());
        advance();
      }
    }
    if (peek() == 'e' || peek() == 'E') {
      v.push_back(peek());
      advance();
      if (peek() == '-' || peek() == '+') {
        v.push_back(peek());
        advance();
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("bad exponent");
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v.push_back(peek());
        advance();
      }
    }
    t.kind = Tok::Number;
    t.text = std::move(v);
    return t;
  }

  Token name_or_pname() {
    Token t;
    t.line = line;
    t.col = col;
    std::string v;
    while (name_char(peek())) {
      v.push_back(peek());
      advance();
    }
    if (peek() == ':') {
      advance();
      std::string local;
      while (name_char(peek())) {
        local.push_back(peek());
        advance();
      }
      t.kind = Tok::Pname;
      t.text = v + ":" + local;
      return t;
    }
    t.kind = Tok::Name;
    t.text = std::move(v);
    return t;
  }
};

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// ------------------------------------------------------------------ parser

struct Parser {
  Lexer lex;
  Token cur;
  std::map<std::string, std::string> prefixes;

  explicit Parser(std::string_view text) : lex{text} { cur = lex.next(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw QuerySyntaxError(msg, cur.line, cur.col);
  }
  void bump() { cur = lex.next(); }
  bool at(Tok k) const { return cur.kind == k; }
  bool at_keyword(const char* kw) const {
    return cur.kind == Tok::Name && upper(cur.text) == kw;
  }
  void expect(Tok k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what);
    bump();
  }
  void expect_keyword(const char* kw) {
    if (!at_keyword(kw)) fail(std::string("expected ") + kw);
    bump();
  }

  std::string resolve_pname(const std::string& text) {
    size_t colon = text.find(':');
    std::string pfx = text.substr(0, colon);
    auto it = prefixes.find(pfx);
    if (it == prefixes.end()) fail("unknown prefix: " + pfx);
    return it->second + text.substr(colon + 1);
  }

  Term iri_term() {
    if (at(Tok::Iri)) {
      Term t = Term::iri(cur.text);
      bump();
      return t;
    }
    if (at(Tok::Pname)) {
      Term t = Term::iri(resolve_pname(cur.text));
      bump();
      return t;
    }
    fail("expected iri");
  }

  Term literal_term() {
    std::string lex_form = cur.text;
    bump();
    if (at(Tok::DtMarker)) {
      bump();
      Term dt = iri_term();
      return Term::literal(std::move(lex_form), dt.value);
    }
    if (at(Tok::At)) {
      bump();
      if (!at(Tok::Name)) fail("expected language tag");
      std::string lang = cur.text;
      bump();
      return Term::literal(std::move(lex_form), "", std::move(lang));
    }
    return Term::literal(std::move(lex_form));
  }

  Term number_term() {
    std::string v = cur.text;
    bump();
    bool integral = v.find_first_of(".eE") == std::string::npos;
    return Term::literal(std::move(v), integral ? xsd::integer_iri : xsd::double_iri);
  }

  PatternTerm pattern_term() {
    if (at(Tok::Variable)) {
      Var v{cur.text};
      bump();
      return v;
    }
    if (at(Tok::Iri) || at(Tok::Pname)) return iri_term();
    if (at(Tok::String)) return literal_term();
    if (at(Tok::Number)) return number_term();
    if (at_keyword("A")) fail("'a' is only valid in predicate position");
    fail("expected term or variable");
  }

  Query parse() {
    while (at_keyword("PREFIX")) {
      bump();
      if (!at(Tok::Pname)) fail("expected prefix declaration");
      std::string decl = cur.text;
      if (decl.empty() || decl.back() != ':') {
        // Pname token is "pfx:local"; a declaration has an empty local part.
        size_t colon = decl.find(':');
        if (colon + 1 != decl.size()) fail("prefix declaration must end with ':'");
        decl = decl.substr(0, colon);
      } else {
        decl.pop_back();
      }
      bump();
      if (!at(Tok::Iri)) fail("expected iri in prefix declaration");
      prefixes[decl] = cur.text;
      bump();
    }

    Query q;
    if (at_keyword("SELECT")) {
      bump();
      q.form = Query::Form::Select;
      parse_select_list(q);
    } else if (at_keyword("CONSTRUCT")) {
      bump();
      q.form = Query::Form::Construct;
      expect(Tok::LBrace, "'{'");
      q.construct_template = parse_template();
      expect(Tok::RBrace, "'}'");
    } else {
      fail("expected SELECT or CONSTRUCT");
    }

    expect_keyword("WHERE");
    expect(Tok::LBrace, "'{'");
    q.body = parse_group();
    expect(Tok::RBrace, "'}'");

    if (at_keyword("GROUP")) {
      bump();
      expect_keyword("BY");
      q.has_group_by = true;
      bool any = false;
      for (;;) {
        if (at(Tok::Variable)) {
          q.group_by.push_back(Var{cur.text});
          bump();
          any = true;
        } else if (at(Tok::LParen)) {
          q.aggregates.push_back(parse_aggregate());
          any = true;
        } else {
          break;
        }
      }
      if (!any) fail("empty GROUP BY");
    }
    if (!at(Tok::Eof)) fail("trailing input after query");
    validate(q);
    return q;
  }

  void parse_select_list(Query& q) {
    bool any = false;
    for (;;) {
      if (at(Tok::Variable)) {
        q.select_vars.push_back(Var{cur.text});
        bump();
        any = true;
      } else if (at(Tok::LParen)) {
        q.aggregates.push_back(parse_aggregate());
        any = true;
      } else {
        break;
      }
    }
    if (!any) fail("empty select list");
  }

  Aggregate parse_aggregate() {
    expect(Tok::LParen, "'('");
    Aggregate agg;
    if (at_keyword("COUNT")) {
      agg.fn = Aggregate::Fn::Count;
    } else if (at_keyword("AVG")) {
      agg.fn = Aggregate::Fn::Avg;
    } else {
      fail("expected COUNT or AVG");
    }
    bump();
    expect(Tok::LParen, "'('");
    if (!at(Tok::Variable)) fail("expected variable in aggregate");
    agg.input = Var{cur.text};
    bump();
    expect(Tok::RParen, "')'");
    expect_keyword("AS");
    if (!at(Tok::Variable)) fail("expected output variable after AS");
    agg.output = Var{cur.text};
    bump();
    expect(Tok::RParen, "')'");
    return agg;
  }

  std::vector<PatternTriple> parse_template() {
    std::vector<PatternTriple> out;
    while (!at(Tok::RBrace)) {
      PatternTriple pt;
      pt.s = pattern_term();
      if (at_keyword("A")) {
        bump();
        pt.p = Term::iri(rdf_ns::type);
      } else if (at(Tok::Variable)) {
        pt.p = PatternTerm{Var{cur.text}};
        bump();
      } else {
        pt.p = iri_term();
      }
      pt.o = pattern_term();
      out.push_back(std::move(pt));
      if (at(Tok::Dot)) bump();
    }
    if (out.empty()) fail("empty construct template");
    return out;
  }

  // One group: elements folded left-to-right. FILTER wraps everything that
  // precedes it in the group; OPTIONAL left-joins against what precedes it.
  PatternExprPtr parse_group() {
    PatternExprPtr acc;
    std::vector<PatternTriple> pending;  // plain patterns not yet flushed

    auto flush = [&]() {
      if (!pending.empty()) {
        auto bgp = make_bgp(std::move(pending));
        pending.clear();
        acc = acc ? make_join(std::move(acc), std::move(bgp)) : std::move(bgp);
      }
    };
    auto current = [&]() -> PatternExprPtr {
      flush();
      if (!acc) acc = make_bgp({});
      return acc;
    };

    while (!at(Tok::RBrace) && !at(Tok::Eof)) {
      if (at_keyword("FILTER")) {
        bump();
        expect(Tok::LParen, "'('");
        FilterExpr f = parse_filter_or();
        expect(Tok::RParen, "')'");
        PatternExprPtr child = current();
        check_filter_scope(f, *child);
        acc = make_filter(std::move(f), std::move(child));
      } else if (at_keyword("OPTIONAL")) {
        bump();
        expect(Tok::LBrace, "'{'");
        PatternExprPtr right = parse_group();
        expect(Tok::RBrace, "'}'");
        acc = make_optional(current(), std::move(right));
      } else if (at_keyword("SERVICE")) {
        bump();
        std::string endpoint;
        if (at(Tok::Iri)) {
          endpoint = cur.text;
          bump();
        } else if (at(Tok::Name)) {
          endpoint = cur.text;
          bump();
        } else {
          fail("expected service endpoint name");
        }
        if (endpoint.empty()) fail("empty service endpoint name");
        expect(Tok::LBrace, "'{'");
        auto items = parse_service_block();
        expect(Tok::RBrace, "'}'");
        auto svc = make_service(std::move(endpoint), std::move(items));
        flush();
        acc = acc ? make_join(std::move(acc), std::move(svc)) : std::move(svc);
      } else if (at(Tok::LBrace)) {
        bump();
        PatternExprPtr g = parse_group();
        expect(Tok::RBrace, "'}'");
        while (at_keyword("UNION")) {
          bump();
          expect(Tok::LBrace, "'{'");
          PatternExprPtr rhs = parse_group();
          expect(Tok::RBrace, "'}'");
          g = make_union(std::move(g), std::move(rhs));
        }
        flush();
        acc = acc ? make_join(std::move(acc), std::move(g)) : std::move(g);
      } else if (at(Tok::Dot)) {
        bump();  // stray separators between elements
      } else {
        // triples-block entry: triple or property path
        PatternTerm s = pattern_term();
        if (at_keyword("A")) {
          bump();
          PatternTriple pt{std::move(s), Term::iri(rdf_ns::type), pattern_term()};
          pending.push_back(std::move(pt));
        } else if (at(Tok::Variable)) {
          PatternTerm p = PatternTerm{Var{cur.text}};
          bump();
          pending.push_back(PatternTriple{std::move(s), std::move(p), pattern_term()});
        } else {
          auto steps = parse_path_steps();
          if (steps.size() == 1 && steps[0].mod == PathStep::Mod::Once) {
            pending.push_back(
                PatternTriple{std::move(s), Term::iri(steps[0].pred), pattern_term()});
          } else {
            PatternPath pp;
            pp.s = std::move(s);
            pp.steps = std::move(steps);
            pp.o = pattern_term();
            flush();
            auto node = make_path(std::move(pp));
            acc = acc ? make_join(std::move(acc), std::move(node)) : std::move(node);
          }
        }
        if (at(Tok::Dot)) bump();
      }
    }
    return current();
  }

  std::vector<PathStep> parse_path_steps() {
    std::vector<PathStep> steps;
    for (;;) {
      Token at_tok = cur;
      Term pred = iri_term();
      PathStep st{pred.value, PathStep::Mod::Once};
      if (at(Tok::Star)) {
        st.mod = PathStep::Mod::Star;
        bump();
      } else if (at(Tok::Plus)) {
        st.mod = PathStep::Mod::Plus;
        bump();
      }
      steps.push_back(std::move(st));
      if (steps.size() > 3) throw QuerySyntaxError("path length exceeds 3 steps", at_tok.line, at_tok.col);
      if (at(Tok::Slash)) {
        bump();
        continue;
      }
      break;
    }
    return steps;
  }

  std::vector<ServiceItem> parse_service_block() {
    std::vector<ServiceItem> items;
    while (!at(Tok::RBrace) && !at(Tok::Eof)) {
      if (at(Tok::Dot)) {
        bump();
        continue;
      }
      PatternTerm s = pattern_term();
      if (at_keyword("A")) {
        bump();
        items.push_back(PatternTriple{std::move(s), Term::iri(rdf_ns::type), pattern_term()});
      } else if (at(Tok::Variable)) {
        PatternTerm p = PatternTerm{Var{cur.text}};
        bump();
        items.push_back(PatternTriple{std::move(s), std::move(p), pattern_term()});
      } else {
        auto steps = parse_path_steps();
        if (steps.size() == 1 && steps[0].mod == PathStep::Mod::Once) {
          items.push_back(
              PatternTriple{std::move(s), Term::iri(steps[0].pred), pattern_term()});
        } else {
          PatternPath pp;
          pp.s = std::move(s);
          pp.steps = std::move(steps);
          pp.o = pattern_term();
          items.push_back(std::move(pp));
        }
      }
      if (at(Tok::Dot)) bump();
    }
    if (items.empty()) fail("empty service block");
    return items;
  }

  FilterExpr parse_filter_or() {
    FilterExpr e = parse_filter_and();
    while (at(Tok::OrOr)) {
      bump();
      FilterExpr rhs = parse_filter_and();
      FilterExpr node;
      node.kind = FilterExpr::Kind::Or;
      node.a = std::make_shared<FilterExpr>(std::move(e));
      node.b = std::make_shared<FilterExpr>(std::move(rhs));
      e = std::move(node);
    }
    return e;
  }

  FilterExpr parse_filter_and() {
    FilterExpr e = parse_filter_unary();
    while (at(Tok::AndAnd)) {
      bump();
      FilterExpr rhs = parse_filter_unary();
      FilterExpr node;
      node.kind = FilterExpr::Kind::And;
      node.a = std::make_shared<FilterExpr>(std::move(e));
      node.b = std::make_shared<FilterExpr>(std::move(rhs));
      e = std::move(node);
    }
    return e;
  }

  FilterExpr parse_filter_unary() {
    if (at(Tok::Bang)) {
      bump();
      FilterExpr node;
      node.kind = FilterExpr::Kind::Not;
      node.a = std::make_shared<FilterExpr>(parse_filter_unary());
      return node;
    }
    if (at(Tok::LParen)) {
      bump();
      FilterExpr e = parse_filter_or();
      expect(Tok::RParen, "')'");
      return e;
    }
    FilterExpr node;
    node.kind = FilterExpr::Kind::Cmp;
    node.cmp.lhs = pattern_term();
    switch (cur.kind) {
      case Tok::Eq: node.cmp.op = FilterCmp::Op::Eq; break;
      case Tok::Ne: node.cmp.op = FilterCmp::Op::Ne; break;
      case Tok::Lt: node.cmp.op = FilterCmp::Op::Lt; break;
      case Tok::Le: node.cmp.op = FilterCmp::Op::Le; break;
      case Tok::Gt: node.cmp.op = FilterCmp::Op::Gt; break;
      case Tok::Ge: node.cmp.op = FilterCmp::Op::Ge; break;
      default: fail("expected comparison operator");
    }
    bump();
    node.cmp.rhs = pattern_term();
    return node;
  }

  static void collect_filter_vars(const FilterExpr& f, std::set<Var>& out) {
    if (f.kind == FilterExpr::Kind::Cmp) {
      if (const Var* v = as_var(f.cmp.lhs)) out.insert(*v);
      if (const Var* v = as_var(f.cmp.rhs)) out.insert(*v);
      return;
    }
    if (f.a) collect_filter_vars(*f.a, out);
    if (f.b) collect_filter_vars(*f.b, out);
  }

  void check_filter_scope(const FilterExpr& f, const PatternExpr& child) {
    std::set<Var> fvars;
    collect_filter_vars(f, fvars);
    auto bound = free_variables(child);
    for (const auto& v : fvars) {
      if (!std::binary_search(bound.begin(), bound.end(), v))
        fail("filter variable ?" + v.name + " is not bound by preceding patterns");
    }
  }

  void validate(const Query& q) {
    auto body_vars = free_variables(*q.body);
    auto bound = [&](const Var& v) {
      if (std::binary_search(body_vars.begin(), body_vars.end(), v)) return true;
      for (const auto& a : q.aggregates)
        if (a.output == v) return true;
      return false;
    };
    for (const auto& v : q.select_vars)
      if (!bound(v)) fail("select variable ?" + v.name + " does not appear in body");
    for (const auto& v : q.group_by)
      if (!std::binary_search(body_vars.begin(), body_vars.end(), v))
        fail("group variable ?" + v.name + " does not appear in body");
    for (const auto& a : q.aggregates)
      if (!std::binary_search(body_vars.begin(), body_vars.end(), a.input))
        fail("aggregate input ?" + a.input.name + " does not appear in body");
    for (const auto& pt : q.construct_template) {
      for (const PatternTerm* t : {&pt.s, &pt.p, &pt.o}) {
        if (const Var* v = as_var(*t)) {
          if (!bound(*v)) fail("template variable ?" + v->name + " does not appear in body");
        } else if (as_term(*t)->is_blank()) {
          fail("blank nodes are not allowed in construct templates");
        }
      }
    }
    if (q.has_group_by) {
      for (const auto& v : q.select_vars) {
        bool is_key = std::find(q.group_by.begin(), q.group_by.end(), v) != q.group_by.end();
        if (!is_key) fail("select variable ?" + v.name + " must be a GROUP BY key");
      }
    } else if (!q.aggregates.empty() && !q.select_vars.empty()) {
      fail("plain select variables cannot mix with aggregates without GROUP BY");
    }
  }
};

}  // namespace

Query parse_query(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------- analysis

namespace {

void collect_vars(const PatternTerm& t, std::set<Var>& out) {
  if (const Var* v = as_var(t)) out.insert(*v);
}

void collect_vars(const PatternExpr& e, std::set<Var>& out) {
  using K = PatternExpr::Kind;
  switch (e.kind) {
    case K::Bgp:
      for (const auto& p : e.patterns) {
        collect_vars(p.s, out);
        collect_vars(p.p, out);
        collect_vars(p.o, out);
      }
      break;
    case K::Path:
      collect_vars(e.path.s, out);
      collect_vars(e.path.o, out);
      break;
    case K::Filter:
      collect_vars(*e.a, out);
      break;
    case K::Optional:
    case K::Union:
    case K::Join:
      collect_vars(*e.a, out);
      collect_vars(*e.b, out);
      break;
    case K::Service:
      for (const auto& item : e.service_items) {
        if (const auto* pt = std::get_if<PatternTriple>(&item)) {
          collect_vars(pt->s, out);
          collect_vars(pt->p, out);
          collect_vars(pt->o, out);
        } else {
          const auto& pp = std::get<PatternPath>(item);
          collect_vars(pp.s, out);
          collect_vars(pp.o, out);
        }
      }
      break;
  }
}

}  // namespace

std::vector<Var> free_variables(const PatternExpr& e) {
  std::set<Var> s;
  collect_vars(e, s);
  return {s.begin(), s.end()};
}

std::vector<Var> free_variables(const Query& q) { return free_variables(*q.body); }

// ----------------------------------------------------------------- printer

namespace {

std::string term_text(const Term& t) {
  switch (t.kind) {
    case TermKind::Iri: return "<" + t.value + ">";
    case TermKind::Blank: return "_:" + t.value;
    case TermKind::Literal: {
      std::string out = "\"";
      for (char c : t.value) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          case '\r': out += "\\r"; break;
          default: out.push_back(c);
        }
      }
      out.push_back('"');
      if (!t.lang.empty()) {
        out += "@" + t.lang;
      } else if (!t.datatype.empty()) {
        out += "^^<" + t.datatype + ">";
      }
      return out;
    }
  }
  return {};
}

std::string triple_text(const PatternTriple& pt) {
  return to_text(pt.s) + " " + to_text(pt.p) + " " + to_text(pt.o) + " .";
}

std::string path_text(const PatternPath& pp) {
  std::string out = to_text(pp.s) + " ";
  for (size_t i = 0; i < pp.steps.size(); i++) {
    if (i) out.push_back('/');
    out += "<" + pp.steps[i].pred + ">";
    if (pp.steps[i].mod == PathStep::Mod::Star) out.push_back('*');
    if (pp.steps[i].mod == PathStep::Mod::Plus) out.push_back('+');
  }
  out += " " + to_text(pp.o) + " .";
  return out;
}

void print_group(const PatternExpr& e, std::string& out);

void print_element(const PatternExpr& e, std::string& out) {
  using K = PatternExpr::Kind;
  auto append = [&](const std::string& s) {
    if (!out.empty() && !s.empty()) out.push_back(' ');
    out += s;
  };
  switch (e.kind) {
    case K::Bgp:
      for (const auto& p : e.patterns) append(triple_text(p));
      break;
    case K::Path:
      append(path_text(e.path));
      break;
    case K::Union: {
      // flatten left-nested unions into a chain
      std::vector<const PatternExpr*> branches;
      const PatternExpr* cur = &e;
      while (cur->kind == K::Union) {
        branches.push_back(cur->b.get());
        cur = cur->a.get();
      }
      branches.push_back(cur);
      std::reverse(branches.begin(), branches.end());
      std::string s;
      for (size_t i = 0; i < branches.size(); i++) {
        if (i) s += " UNION ";
        std::string inner;
        print_group(*branches[i], inner);
        s += "{ " + inner + " }";
      }
      append(s);
      break;
    }
    case K::Service: {
      std::string inner;
      for (const auto& item : e.service_items) {
        if (!inner.empty()) inner.push_back(' ');
        if (const auto* pt = std::get_if<PatternTriple>(&item))
          inner += triple_text(*pt);
        else
          inner += path_text(std::get<PatternPath>(item));
      }
      append("SERVICE <" + e.endpoint + "> { " + inner + " }");
      break;
    }
    default: {
      // shapes that only occur as a whole group get brace-wrapped
      std::string inner;
      print_group(e, inner);
      append("{ " + inner + " }");
      break;
    }
  }
}

void print_group(const PatternExpr& e, std::string& out) {
  using K = PatternExpr::Kind;
  switch (e.kind) {
    case K::Join:
      print_group(*e.a, out);
      print_element(*e.b, out);
      break;
    case K::Filter: {
      print_group(*e.a, out);
      if (!out.empty()) out.push_back(' ');
      out += "FILTER(" + to_text(e.filter) + ")";
      break;
    }
    case K::Optional: {
      print_group(*e.a, out);
      std::string inner;
      print_group(*e.b, inner);
      if (!out.empty()) out.push_back(' ');
      out += "OPTIONAL { " + inner + " }";
      break;
    }
    default:
      print_element(e, out);
      break;
  }
}

}  // namespace

std::string to_text(const PatternTerm& t) {
  if (const Var* v = as_var(t)) return "?" + v->name;
  return term_text(*as_term(t));
}

std::string to_text(const FilterExpr& e) {
  switch (e.kind) {
    case FilterExpr::Kind::Cmp: {
      const char* op = "=";
      switch (e.cmp.op) {
        case FilterCmp::Op::Eq: op = "="; break;
        case FilterCmp::Op::Ne: op = "!="; break;
        case FilterCmp::Op::Lt: op = "<"; break;
        case FilterCmp::Op::Le: op = "<="; break;
        case FilterCmp::Op::Gt: op = ">"; break;
        case FilterCmp::Op::Ge: op = ">="; break;
      }
      return to_text(e.cmp.lhs) + " " + op + " " + to_text(e.cmp.rhs);
    }
    case FilterExpr::Kind::And: return "(" + to_text(*e.a) + ") && (" + to_text(*e.b) + ")";
    case FilterExpr::Kind::Or: return "(" + to_text(*e.a) + ") || (" + to_text(*e.b) + ")";
    case FilterExpr::Kind::Not: return "!(" + to_text(*e.a) + ")";
  }
  return {};
}

std::string to_text(const PatternExpr& e) {
  std::string out;
  print_group(e, out);
  return out;
}

std::string to_text(const Query& q) {
  std::string out;
  if (q.form == Query::Form::Select) {
    out = "SELECT";
    for (const auto& v : q.select_vars) out += " ?" + v.name;
    if (!q.has_group_by) {
      for (const auto& a : q.aggregates) {
        out += std::string(" (") + (a.fn == Aggregate::Fn::Count ? "COUNT" : "AVG") + "(?" +
               a.input.name + ") AS ?" + a.output.name + ")";
      }
    }
  } else {
    out = "CONSTRUCT {";
    for (const auto& pt : q.construct_template) out += " " + triple_text(pt);
    out += " }";
  }
  out += " WHERE { " + to_text(*q.body) + " }";
  if (q.has_group_by) {
    out += " GROUP BY";
    for (const auto& v : q.group_by) out += " ?" + v.name;
    for (const auto& a : q.aggregates) {
      out += std::string(" (") + (a.fn == Aggregate::Fn::Count ? "COUNT" : "AVG") + "(?" +
             a.input.name + ") AS ?" + a.output.name + ")";
    }
  }
  return out;
}

}  // namespace dscep
