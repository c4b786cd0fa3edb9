#pragma once

// Independent bottom-up evaluator used as the engine oracle. Works on plain
// triple vectors and global relations (repeated-squaring closures) instead of
// the engine's seeded walks and indexes, so shared bugs are unlikely.
#include <vector>

#include "dscep/engine.hpp"
#include "dscep/query.hpp"
#include "dscep/rdf.hpp"
#include "dscep/window.hpp"

namespace dscep::testing {

struct NaiveResult {
  std::vector<SolutionMapping> solutions;              // select form
  std::vector<std::vector<Triple>> construct_groups;   // construct form
};

// mode None: kb ignored. LocalMerge: patterns match window-union-kb.
// RemoteService: patterns match the window only; SERVICE blocks match kb.
NaiveResult naive_evaluate(const Query& q, const Window& w, const std::vector<Triple>& kb,
                           KbMode mode);

// Multiset comparison helpers (sort + equality).
bool same_solutions(std::vector<SolutionMapping> a, std::vector<SolutionMapping> b);
bool same_groups(std::vector<std::vector<Triple>> a, std::vector<std::vector<Triple>> b);

}  // namespace dscep::testing
