#include "dscep/engine.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "dscep/errors.hpp"

namespace dscep {

namespace {

constexpr size_t kPathExpansionCap = 10000;

// ---------------------------------------------------------------- matching

struct EvalCtx {
  const TripleStore* window = nullptr;
  const std::unordered_set<Triple>* window_set = nullptr;
  const TripleStore* kb = nullptr;
  uint64_t kb_touched = 0;
  KbTouchRecorder* recorder = nullptr;
  std::unordered_map<const PatternExpr*, std::vector<SolutionMapping>> service_rows;

  void touch(const Triple& t) {
    kb_touched++;
    if (recorder) recorder->triple(t);
  }

  // Set union of window and KB matches; KB hits are counted/recorded.
  std::vector<Triple> match_union(const TriplePattern& pat) {
    std::vector<Triple> out = window->match(pat);
    if (kb) {
      for (auto& t : kb->match(pat)) {
        touch(t);
        if (!window_set->count(t)) out.push_back(std::move(t));
      }
    }
    return out;
  }
};

std::optional<Term> resolve(const PatternTerm& pt, const SolutionMapping& row) {
  if (const Term* t = as_term(pt)) return *t;
  const Term* b = row.get(as_var(pt)->name);
  if (b) return *b;
  return std::nullopt;
}

// Unify one pattern position with a concrete term, binding free variables.
bool bind_check(SolutionMapping& row, const PatternTerm& pt, const Term& t) {
  if (const Var* v = as_var(pt)) {
    auto it = row.bindings.find(v->name);
    if (it == row.bindings.end()) {
      row.bindings.emplace(v->name, t);
      return true;
    }
    return it->second == t;
  }
  return *as_term(pt) == t;
}

void eval_triple_pattern(const PatternTriple& pat, const std::vector<SolutionMapping>& in,
                         std::vector<SolutionMapping>& out, EvalCtx& ctx) {
  for (const auto& row : in) {
    TriplePattern look{resolve(pat.s, row), resolve(pat.p, row), resolve(pat.o, row)};
    for (const auto& t : ctx.match_union(look)) {
      SolutionMapping next = row;
      if (bind_check(next, pat.s, t.s) && bind_check(next, pat.p, t.p) &&
          bind_check(next, pat.o, t.o)) {
        out.push_back(std::move(next));
      }
    }
  }
}

// ------------------------------------------------------------------- paths

std::vector<Term> step_neighbors(const Term& from, const std::string& pred, bool forward,
                                 EvalCtx& ctx) {
  TriplePattern pat;
  pat.p = Term::iri(pred);
  if (forward) {
    pat.s = from;
  } else {
    pat.o = from;
  }
  std::vector<Term> out;
  for (const auto& t : ctx.match_union(pat)) out.push_back(forward ? t.o : t.s);
  return out;
}

// Reflexive-transitive (star) or transitive (plus) closure from one node,
// BFS over the union dataset, capped.
std::vector<Term> closure_from(const Term& start, const std::string& pred, bool forward,
                               bool reflexive, EvalCtx& ctx) {
  std::vector<Term> order;
  std::unordered_set<Term> visited;
  std::deque<Term> q;
  if (reflexive) {
    visited.insert(start);
    order.push_back(start);
    q.push_back(start);
  } else {
    for (const auto& n : step_neighbors(start, pred, forward, ctx)) {
      if (visited.insert(n).second) {
        order.push_back(n);
        q.push_back(n);
      }
    }
  }
  while (!q.empty()) {
    Term cur = q.front();
    q.pop_front();
    if (visited.size() > kPathExpansionCap)
      throw EvalError("path expansion limit exceeded for <" + pred + ">");
    for (const auto& n : step_neighbors(cur, pred, forward, ctx)) {
      if (visited.insert(n).second) {
        order.push_back(n);
        q.push_back(n);
      }
    }
  }
  return order;
}

// All distinct terms appearing in subject or object position (path domain
// for fully unbound reflexive closure).
std::vector<Term> dataset_terms(EvalCtx& ctx) {
  std::vector<Term> out;
  std::unordered_set<Term> seen;
  auto add = [&](const Term& t) {
    if (seen.insert(t).second) out.push_back(t);
  };
  for (const auto& t : ctx.window->triples()) {
    add(t.s);
    add(t.o);
  }
  if (ctx.kb) {
    for (const auto& t : ctx.kb->triples()) {
      ctx.touch(t);
      add(t.s);
      add(t.o);
    }
  }
  return out;
}

using TermPair = std::pair<Term, Term>;  // (anchor, frontier)

void apply_step(std::vector<TermPair>& pairs, const PathStep& st, bool forward, EvalCtx& ctx) {
  std::vector<TermPair> next;
  for (const auto& [anchor, cur] : pairs) {
    if (st.mod == PathStep::Mod::Once) {
      for (const auto& n : step_neighbors(cur, st.pred, forward, ctx)) next.emplace_back(anchor, n);
    } else {
      bool reflexive = st.mod == PathStep::Mod::Star;
      for (const auto& n : closure_from(cur, st.pred, forward, reflexive, ctx))
        next.emplace_back(anchor, n);
    }
  }
  pairs = std::move(next);
}

void eval_path_pattern(const PatternPath& pp, const std::vector<SolutionMapping>& in,
                       std::vector<SolutionMapping>& out, EvalCtx& ctx) {
  for (const auto& row : in) {
    std::optional<Term> s = resolve(pp.s, row);
    std::optional<Term> o = resolve(pp.o, row);

    // Build (start, end) pairs. Prefer anchoring at a bound endpoint; the
    // reverse direction walks the steps backwards with inverted edges.
    std::vector<TermPair> pairs;
    bool reversed = false;
    if (s) {
      pairs.emplace_back(*s, *s);
      for (const auto& st : pp.steps) apply_step(pairs, st, true, ctx);
    } else if (o) {
      reversed = true;
      pairs.emplace_back(*o, *o);
      for (auto it = pp.steps.rbegin(); it != pp.steps.rend(); ++it)
        apply_step(pairs, *it, false, ctx);
    } else {
      // both endpoints open: seed with every dataset term, then walk forward
      for (const auto& t : dataset_terms(ctx)) pairs.emplace_back(t, t);
      for (const auto& st : pp.steps) apply_step(pairs, st, true, ctx);
    }

    for (const auto& [anchor, frontier] : pairs) {
      const Term& start = reversed ? frontier : anchor;
      const Term& end = reversed ? anchor : frontier;
      SolutionMapping next = row;
      if (bind_check(next, pp.s, start) && bind_check(next, pp.o, end))
        out.push_back(std::move(next));
    }
  }
}

// ----------------------------------------------------------------- filters

struct FilterError {};

Term operand(const PatternTerm& pt, const SolutionMapping& row) {
  if (const Term* t = as_term(pt)) return *t;
  const Term* b = row.get(as_var(pt)->name);
  if (!b) throw FilterError{};  // unbound variable
  return *b;
}

double numeric_or_fail(const Term& t) {
  auto v = t.numeric_value();
  if (!v) throw FilterError{};  // malformed numeric lexical form
  return *v;
}

bool eval_cmp(const FilterCmp& cmp, const SolutionMapping& row) {
  Term l = operand(cmp.lhs, row);
  Term r = operand(cmp.rhs, row);
  bool both_numeric = l.is_numeric() && r.is_numeric();
  using Op = FilterCmp::Op;
  if (cmp.op == Op::Eq || cmp.op == Op::Ne) {
    bool eq = both_numeric ? numeric_or_fail(l) == numeric_or_fail(r) : l == r;
    return cmp.op == Op::Eq ? eq : !eq;
  }
  int sign;
  if (both_numeric) {
    double a = numeric_or_fail(l), b = numeric_or_fail(r);
    sign = a < b ? -1 : (a > b ? 1 : 0);
  } else {
    sign = l.value < r.value ? -1 : (l.value > r.value ? 1 : 0);
  }
  switch (cmp.op) {
    case Op::Lt: return sign < 0;
    case Op::Le: return sign <= 0;
    case Op::Gt: return sign > 0;
    case Op::Ge: return sign >= 0;
    default: return false;
  }
}

// Errors propagate unless a short-circuit already decided the value; a row
// whose filter errors is dropped (never aborts the evaluation).
bool eval_filter(const FilterExpr& f, const SolutionMapping& row) {
  switch (f.kind) {
    case FilterExpr::Kind::Cmp: return eval_cmp(f.cmp, row);
    case FilterExpr::Kind::And: return eval_filter(*f.a, row) && eval_filter(*f.b, row);
    case FilterExpr::Kind::Or: return eval_filter(*f.a, row) || eval_filter(*f.b, row);
    case FilterExpr::Kind::Not: return !eval_filter(*f.a, row);
  }
  return false;
}

// ------------------------------------------------------------ algebra walk

std::optional<SolutionMapping> compatible_merge(const SolutionMapping& a,
                                                const SolutionMapping& b) {
  SolutionMapping out = a;
  for (const auto& [k, v] : b.bindings) {
    auto it = out.bindings.find(k);
    if (it == out.bindings.end()) {
      out.bindings.emplace(k, v);
    } else if (it->second != v) {
      return std::nullopt;
    }
  }
  return out;
}

std::vector<SolutionMapping> eval_expr(const PatternExpr& e, std::vector<SolutionMapping> in,
                                       EvalCtx& ctx) {
  using K = PatternExpr::Kind;
  switch (e.kind) {
    case K::Bgp: {
      std::vector<SolutionMapping> rows = std::move(in);
      for (const auto& pat : e.patterns) {
        std::vector<SolutionMapping> next;
        eval_triple_pattern(pat, rows, next, ctx);
        rows = std::move(next);
      }
      return rows;
    }
    case K::Path: {
      std::vector<SolutionMapping> out;
      eval_path_pattern(e.path, in, out, ctx);
      return out;
    }
    case K::Join: return eval_expr(*e.b, eval_expr(*e.a, std::move(in), ctx), ctx);
    case K::Filter: {
      std::vector<SolutionMapping> rows = eval_expr(*e.a, std::move(in), ctx);
      std::vector<SolutionMapping> out;
      for (auto& row : rows) {
        try {
          if (eval_filter(e.filter, row)) out.push_back(std::move(row));
        } catch (const FilterError&) {
          // row dropped
        }
      }
      return out;
    }
    case K::Optional: {
      std::vector<SolutionMapping> left = eval_expr(*e.a, std::move(in), ctx);
      std::vector<SolutionMapping> out;
      for (auto& l : left) {
        std::vector<SolutionMapping> ext = eval_expr(*e.b, {l}, ctx);
        if (ext.empty()) {
          out.push_back(std::move(l));
        } else {
          for (auto& r : ext) out.push_back(std::move(r));
        }
      }
      return out;
    }
    case K::Union: {
      std::vector<SolutionMapping> out = eval_expr(*e.a, in, ctx);
      for (auto& r : eval_expr(*e.b, std::move(in), ctx)) out.push_back(std::move(r));
      return out;
    }
    case K::Service: {
      const auto& rows = ctx.service_rows.at(&e);
      std::vector<SolutionMapping> out;
      for (const auto& l : in) {
        for (const auto& r : rows) {
          if (auto merged = compatible_merge(l, r)) out.push_back(std::move(*merged));
        }
      }
      return out;
    }
  }
  return {};
}

void collect_service_nodes(const PatternExpr& e, std::vector<const PatternExpr*>& out) {
  using K = PatternExpr::Kind;
  switch (e.kind) {
    case K::Service: out.push_back(&e); break;
    case K::Filter: collect_service_nodes(*e.a, out); break;
    case K::Join:
    case K::Optional:
    case K::Union:
      collect_service_nodes(*e.a, out);
      collect_service_nodes(*e.b, out);
      break;
    default: break;
  }
}

// ------------------------------------------------------- heads of a query

std::vector<Var> service_block_vars(const PatternExpr& svc) {
  PatternExpr probe;
  probe.kind = PatternExpr::Kind::Service;
  probe.endpoint = svc.endpoint;
  probe.service_items = svc.service_items;
  return free_variables(probe);
}

std::vector<SolutionMapping> aggregate_rows(const Query& q, std::vector<SolutionMapping> rows) {
  using Key = std::vector<std::optional<Term>>;
  std::map<Key, std::vector<SolutionMapping>> groups;
  if (q.has_group_by) {
    for (auto& row : rows) {
      Key key;
      key.reserve(q.group_by.size());
      for (const auto& v : q.group_by) {
        const Term* t = row.get(v.name);
        key.push_back(t ? std::optional<Term>(*t) : std::nullopt);
      }
      groups[std::move(key)].push_back(std::move(row));
    }
  } else {
    // aggregates without GROUP BY: one global group (even when empty)
    groups[Key{}] = std::move(rows);
  }

  std::vector<SolutionMapping> out;
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end());  // order-free folds
    SolutionMapping res;
    for (size_t i = 0; i < q.group_by.size(); i++) {
      if (key[i]) res.bindings.emplace(q.group_by[i].name, *key[i]);
    }
    for (const auto& agg : q.aggregates) {
      if (agg.fn == Aggregate::Fn::Count) {
        int64_t n = 0;
        for (const auto& m : members)
          if (m.get(agg.input.name)) n++;
        res.bindings.emplace(agg.output.name, Term::integer(n));
      } else {
        double sum = 0;
        int64_t n = 0;
        for (const auto& m : members) {
          const Term* t = m.get(agg.input.name);
          if (!t || !t->is_numeric()) continue;
          auto v = t->numeric_value();
          if (!v) continue;
          sum += *v;
          n++;
        }
        if (n > 0) res.bindings.emplace(agg.output.name, Term::number(sum / n));
        // zero numeric rows: the avg variable stays unbound
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace

std::vector<Triple> window_dataset(const Window& w) {
  std::vector<Triple> out;
  std::unordered_set<Triple> seen;
  for (size_t i = 0; i < w.events.size(); i++) {
    std::string prefix = "e" + std::to_string(i) + ".";
    for (const auto& tt : w.events[i].triples) {
      Triple t = tt.triple;
      for (Term* term : {&t.s, &t.o}) {
        if (term->is_blank()) term->value = prefix + term->value;
      }
      if (seen.insert(t).second) out.push_back(std::move(t));
    }
  }
  return out;
}

Engine::Engine(Query q, KbConfig kb) : q_(std::move(q)), kb_(std::move(kb)) {
  std::vector<const PatternExpr*> services;
  collect_service_nodes(*q_.body, services);
  if (!services.empty() && kb_.mode != KbMode::RemoteService)
    throw ConfigError("query contains SERVICE but kb mode is not remote_service");
  if (kb_.mode == KbMode::RemoteService) {
    if (!kb_.transport) throw ConfigError("remote_service requires a transport");
    for (const auto* s : services) {
      if (!kb_.endpoints.count(s->endpoint))
        throw ConfigError("unresolved SERVICE endpoint: " + s->endpoint);
    }
  }
  if (kb_.mode == KbMode::LocalMerge) {
    if (!kb_.store && !kb_.kb_text) throw ConfigError("local_merge requires a store or kb text");
    if (kb_.reload_per_window && !kb_.kb_text)
      throw ConfigError("per-window reload requires kb text");
    if (!kb_.reload_per_window) {
      preloaded_ = kb_.store ? kb_.store
                             : std::make_shared<const TripleStore>(
                                   TripleStore::load_text(*kb_.kb_text, true));
    }
  }
}

WindowResult Engine::evaluate(const Window& w, KbTouchRecorder* recorder) {
  auto t0 = std::chrono::steady_clock::now();

  std::shared_ptr<const TripleStore> kb_store;
  if (kb_.mode == KbMode::LocalMerge) {
    // The reload is deliberate per-window work: parse + index + closures.
    kb_store = kb_.reload_per_window ? std::make_shared<const TripleStore>(
                                           TripleStore::load_text(*kb_.kb_text, true))
                                     : preloaded_;
  }

  std::vector<Triple> wtriples = window_dataset(w);
  TripleStore wstore = TripleStore::from_triples(wtriples);
  std::unordered_set<Triple> wset(wtriples.begin(), wtriples.end());

  EvalCtx ctx;
  ctx.window = &wstore;
  ctx.window_set = &wset;
  ctx.kb = kb_store.get();
  ctx.recorder = recorder;

  if (kb_.mode == KbMode::RemoteService) {
    // One batched, unseeded request per SERVICE block per window.
    std::vector<const PatternExpr*> services;
    collect_service_nodes(*q_.body, services);
    for (const auto* s : services) {
      ServiceReply reply = kb_.transport->bgp_query(s->endpoint, s->service_items,
                                                    service_block_vars(*s));
      ctx.kb_touched += reply.touched;
      ctx.service_rows.emplace(s, std::move(reply.rows));
    }
  }

  std::vector<SolutionMapping> rows = eval_expr(*q_.body, {SolutionMapping{}}, ctx);
  if (q_.has_group_by || !q_.aggregates.empty()) rows = aggregate_rows(q_, rows);

  WindowResult res;
  res.seq_no = w.seq_no;
  if (q_.form == Query::Form::Select) {
    std::vector<Var> keep = q_.select_vars;
    for (const auto& a : q_.aggregates) keep.push_back(a.output);
    if (keep.empty()) {
      res.solutions = std::move(rows);
    } else {
      for (const auto& row : rows) {
        SolutionMapping proj;
        for (const auto& v : keep) {
          if (const Term* t = row.get(v.name)) proj.bindings.emplace(v.name, *t);
        }
        res.solutions.push_back(std::move(proj));
      }
    }
  } else {
    for (const auto& row : rows) {
      std::vector<Triple> group;
      group.reserve(q_.construct_template.size());
      bool ground = true;
      for (const auto& pt : q_.construct_template) {
        Triple t;
        const PatternTerm* src[3] = {&pt.s, &pt.p, &pt.o};
        Term* dst[3] = {&t.s, &t.p, &t.o};
        for (int i = 0; i < 3 && ground; i++) {
          if (const Var* v = as_var(*src[i])) {
            const Term* b = row.get(v->name);
            if (!b) {
              ground = false;  // unbound template variable drops the group
            } else {
              *dst[i] = *b;
            }
          } else {
            *dst[i] = *as_term(*src[i]);
          }
        }
        if (!ground) break;
        group.push_back(std::move(t));
      }
      if (ground) res.construct_groups.push_back(std::move(group));
    }
  }

  res.kb_triples_touched = ctx.kb_touched;
  auto t1 = std::chrono::steady_clock::now();
  res.eval_millis = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return res;
}

WindowResult evaluate_window(const Query& q, const Window& w, const KbConfig& kb,
                             KbTouchRecorder* recorder) {
  Engine e(q, kb);
  return e.evaluate(w, recorder);
}

std::pair<std::vector<SolutionMapping>, uint64_t> evaluate_block(
    const TripleStore& store, const std::vector<ServiceItem>& items,
    const std::vector<Var>& vars) {
  static const TripleStore kEmptyStore = TripleStore::from_triples({});
  static const std::unordered_set<Triple> kEmptySet;
  EvalCtx ctx;
  ctx.window = &kEmptyStore;
  ctx.window_set = &kEmptySet;
  ctx.kb = &store;

  std::vector<SolutionMapping> rows{SolutionMapping{}};
  for (const auto& item : items) {
    std::vector<SolutionMapping> next;
    if (const auto* pat = std::get_if<PatternTriple>(&item)) {
      eval_triple_pattern(*pat, rows, next, ctx);
    } else {
      eval_path_pattern(std::get<PatternPath>(item), rows, next, ctx);
    }
    rows = std::move(next);
  }
  if (!vars.empty()) {
    for (auto& row : rows) {
      SolutionMapping proj;
      for (const auto& v : vars) {
        if (const Term* t = row.get(v.name)) proj.bindings.emplace(v.name, *t);
      }
      row = std::move(proj);
    }
  }
  return {std::move(rows), ctx.kb_touched};
}

std::vector<Triple> extract_used_kb(const TripleStore& store, const Query& q,
                                    const std::vector<Window>& sample) {
  struct SetRecorder : KbTouchRecorder {
    std::unordered_set<Triple> seen;
    void triple(const Triple& t) override { seen.insert(t); }
  } rec;

  KbConfig cfg;
  cfg.mode = KbMode::LocalMerge;
  cfg.store = std::shared_ptr<const TripleStore>(std::shared_ptr<const TripleStore>{}, &store);
  cfg.reload_per_window = false;
  Engine engine(q, cfg);
  for (const auto& w : sample) engine.evaluate(w, &rec);

  std::vector<Triple> out;
  for (const auto& t : store.triples()) {
    if (rec.seen.count(t)) out.push_back(t);
  }
  return out;
}

}  // namespace dscep
