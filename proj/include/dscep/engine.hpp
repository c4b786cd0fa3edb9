#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dscep/query.hpp"
#include "dscep/rdf.hpp"
#include "dscep/store.hpp"
#include "dscep/window.hpp"

namespace dscep {

// Partial variable assignment; map keeps a canonical key order so mappings
// can be compared and serialized deterministically.
struct SolutionMapping {
  std::map<std::string, Term> bindings;

  const Term* get(const std::string& var) const {
    auto it = bindings.find(var);
    return it == bindings.end() ? nullptr : &it->second;
  }
  bool operator==(const SolutionMapping&) const = default;
  auto operator<=>(const SolutionMapping&) const = default;
};

// Rows a SERVICE endpoint returned for one block, plus its reported KB cost.
struct ServiceReply {
  std::vector<SolutionMapping> rows;
  uint64_t touched = 0;
};

// Transport used to evaluate SERVICE blocks. The production implementation
// speaks the KB service socket protocol; tests may substitute an in-process
// one. Implementations throw EvalError (tagged with the endpoint name) on
// connection failure.
struct ServiceTransport {
  virtual ~ServiceTransport() = default;
  virtual ServiceReply bgp_query(const std::string& endpoint,
                                 const std::vector<ServiceItem>& items,
                                 const std::vector<Var>& vars) = 0;
};

enum class KbMode { None, LocalMerge, RemoteService };

struct KbConfig {
  KbMode mode = KbMode::None;
  // local_merge: either a preloaded store, or kb_text with reload_per_window
  // (the default for benchmark fidelity: the KB is re-parsed, re-indexed and
  // re-closed for every window, so per-window cost scales with total KB size).
  std::shared_ptr<const TripleStore> store;
  std::shared_ptr<const std::string> kb_text;
  bool reload_per_window = true;
  // remote_service: endpoint name -> "host:port", resolved by the transport.
  std::map<std::string, std::string> endpoints;
  std::shared_ptr<ServiceTransport> transport;
};

// Ordered per-window evaluation output. Select queries fill solutions
// (projected); construct queries fill one ground triple group per solution.
struct WindowResult {
  uint64_t seq_no = 0;
  std::vector<SolutionMapping> solutions;
  std::vector<std::vector<Triple>> construct_groups;
  double eval_millis = 0;
  uint64_t kb_triples_touched = 0;
};

// Collects the KB triples an evaluation actually touched (index hits and
// closure support edges); drives used-KB extraction.
struct KbTouchRecorder {
  virtual ~KbTouchRecorder() = default;
  virtual void triple(const Triple& t) = 0;
};

// One continuous query bound to a KB access mode. Construction validates the
// combination (SERVICE nodes need remote_service with resolvable endpoints;
// local_merge/none queries must not contain SERVICE) and throws ConfigError.
class Engine {
 public:
  Engine(Query q, KbConfig kb);

  // Full per-window evaluation; eval_millis covers KB reload (when enabled),
  // window indexing and matching. Deterministic: equal inputs, equal outputs.
  WindowResult evaluate(const Window& w, KbTouchRecorder* recorder = nullptr);

  const Query& query() const { return q_; }

 private:
  Query q_;
  KbConfig kb_;
  std::shared_ptr<const TripleStore> preloaded_;
};

WindowResult evaluate_window(const Query& q, const Window& w, const KbConfig& kb,
                             KbTouchRecorder* recorder = nullptr);

// Deduplicated window dataset with per-event blank-node scoping: blank labels
// get an "e<index>." prefix so equal labels in different events stay distinct.
std::vector<Triple> window_dataset(const Window& w);

// Evaluates q over sample windows against the store (no reload) and returns
// the touched subset in store order. Evaluating q against the returned subset
// reproduces the results seen against the full store on those windows.
std::vector<Triple> extract_used_kb(const TripleStore& store, const Query& q,
                                    const std::vector<Window>& sample);

// Evaluates a SERVICE-style block (plain patterns and paths, folded left to
// right from one empty mapping) against a single store, projected to vars
// (empty vars keep full rows). Second element counts store triples touched.
std::pair<std::vector<SolutionMapping>, uint64_t> evaluate_block(
    const TripleStore& store, const std::vector<ServiceItem>& items, const std::vector<Var>& vars);

}  // namespace dscep
