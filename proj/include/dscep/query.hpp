#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dscep/rdf.hpp"

namespace dscep {

struct Var {
  std::string name;
  auto operator<=>(const Var&) const = default;
  bool operator==(const Var&) const = default;
};

using PatternTerm = std::variant<Term, Var>;

bool is_var(const PatternTerm& pt);
const Var* as_var(const PatternTerm& pt);
const Term* as_term(const PatternTerm& pt);

struct PatternTriple {
  PatternTerm s, p, o;
  bool operator==(const PatternTriple&) const = default;
};

// One step of a property path; predicates are IRIs. Star/Plus mark
// reflexive-transitive / transitive closure of the single step.
struct PathStep {
  enum class Mod { Once, Star, Plus };
  std::string pred;
  Mod mod = Mod::Once;
  bool operator==(const PathStep&) const = default;
};

// s step1/step2/step3 o with at most three steps.
struct PatternPath {
  PatternTerm s;
  std::vector<PathStep> steps;
  PatternTerm o;
  bool operator==(const PatternPath&) const = default;
};

struct FilterExpr;

struct FilterCmp {
  enum class Op { Eq, Ne, Lt, Le, Gt, Ge };
  Op op = Op::Eq;
  PatternTerm lhs, rhs;
  bool operator==(const FilterCmp&) const = default;
};

// Boolean tree over comparisons. And/Or use a and b; Not uses a.
struct FilterExpr {
  enum class Kind { Cmp, And, Or, Not };
  Kind kind = Kind::Cmp;
  FilterCmp cmp;
  std::shared_ptr<FilterExpr> a, b;
};

bool filter_equal(const FilterExpr& x, const FilterExpr& y);

using ServiceItem = std::variant<PatternTriple, PatternPath>;

struct PatternExpr;
using PatternExprPtr = std::shared_ptr<PatternExpr>;

// Algebra node. Children a/b are used by Join, Optional, Union (both) and
// Filter (a only). Bgp holds plain patterns; Path is its own node so textual
// order survives into evaluation order.
struct PatternExpr {
  enum class Kind { Bgp, Path, Filter, Optional, Union, Join, Service };
  Kind kind = Kind::Bgp;
  std::vector<PatternTriple> patterns;  // Bgp
  PatternPath path;                     // Path
  FilterExpr filter;                    // Filter
  PatternExprPtr a, b;
  std::string endpoint;                 // Service: endpoint name
  std::vector<ServiceItem> service_items;
};

bool pattern_equal(const PatternExpr& x, const PatternExpr& y);

PatternExprPtr make_bgp(std::vector<PatternTriple> patterns);
PatternExprPtr make_path(PatternPath p);
PatternExprPtr make_join(PatternExprPtr a, PatternExprPtr b);
PatternExprPtr make_filter(FilterExpr f, PatternExprPtr child);
PatternExprPtr make_optional(PatternExprPtr left, PatternExprPtr right);
PatternExprPtr make_union(PatternExprPtr a, PatternExprPtr b);
PatternExprPtr make_service(std::string endpoint, std::vector<ServiceItem> items);

struct Aggregate {
  enum class Fn { Count, Avg };
  Fn fn = Fn::Count;
  Var input;
  Var output;
  bool operator==(const Aggregate&) const = default;
};

struct Query {
  enum class Form { Select, Construct };
  Form form = Form::Select;
  std::vector<Var> select_vars;               // Select: plain projections
  std::vector<PatternTriple> construct_template;
  std::vector<Aggregate> aggregates;          // with grouping (or one global group)
  std::vector<Var> group_by;
  bool has_group_by = false;
  PatternExprPtr body;
};

bool query_equal(const Query& x, const Query& y);

// Parses the query dialect: PREFIX, SELECT/CONSTRUCT, WHERE groups with
// FILTER / OPTIONAL / UNION / SERVICE, property paths of up to three steps,
// GROUP BY with COUNT/AVG. Throws QuerySyntaxError with line/col.
Query parse_query(std::string_view text);

// All variables occurring in the body (including SERVICE blocks), sorted.
std::vector<Var> free_variables(const Query& q);
std::vector<Var> free_variables(const PatternExpr& e);

// Canonical text form; parse(to_text(q)) reproduces q for parser-shaped ASTs.
std::string to_text(const Query& q);
std::string to_text(const PatternExpr& e);
std::string to_text(const FilterExpr& e);
std::string to_text(const PatternTerm& t);

}  // namespace dscep
