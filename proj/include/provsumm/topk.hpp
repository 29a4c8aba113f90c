#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "provsumm/patterns.hpp"

namespace provsumm {

// True when general abstracts specific: same rule and flags, and every
// constant general pins is matched by specific. Reflexive; a pattern with
// extra constants sits below the one it refines.
bool generalizes(const DerivationPattern& specific, const DerivationPattern& general);

// True when no derivation can match both: different rules, different flags,
// or two constants that disagree at the same position.
bool disjoint(const DerivationPattern& a, const DerivationPattern& b);

// Bounds on the coverage of a pattern set from structure alone.
// Upper: sum over members no other member abstracts, capped at 1.
// Lower: best pairwise-disjoint subset sum (exact up to 10 members, greedy
// by descending coverage beyond that), never below the best single member.
std::pair<double, double> cp_bounds(const std::vector<PatternCandidate>& set);

// A node in the subset search. members indexes into the candidate pool in
// canonical order and is strictly increasing.
struct CandidateSet {
  std::vector<std::size_t> members;
  double cp_lb = 0.0;
  double cp_ub = 0.0;
  double score_lb = 0.0;
  double score_ub = 0.0;
  bool complete = false;  // |members| == k
};

// Score bounds for a set that already carries cp bounds. The upper bound
// optimistically extends the set with up to k - |members| candidates drawn
// from indices past members.back(), each granted the pool's best remaining
// coverage and informativeness.
std::pair<double, double> score_bounds(const CandidateSet& set,
                                       const std::vector<PatternCandidate>& candidates,
                                       std::size_t k);

struct SummaryResult {
  std::vector<PatternCandidate> patterns;  // descending cp_estimate
  double score_lb = 0.0;
  double score_ub = 0.0;
  bool exact = false;  // the returned set is provably optimal
};

// Best-first search over candidate subsets of size 1..k, maximizing the
// harmonic combination of set coverage and mean informativeness. Zero-
// coverage candidates are dropped up front. When every candidate carries a
// match bitmask over one common sample, set coverage is tightened to the
// exact union fraction. Ties break toward the lexicographically smallest
// member-index sequence in canonical (ascending cp_estimate) order.
// node_budget caps how many sets the search may create; past it the best
// known set is returned with exact = false.
SummaryResult best_first_topk(const std::vector<PatternCandidate>& candidates,
                              std::size_t k, std::size_t node_budget = 500'000);

}  // namespace provsumm
