#pragma once

#include <cstddef>
#include <vector>

#include "provsumm/datalog.hpp"
#include "provsumm/sampling.hpp"
#include "provsumm/topk.hpp"

namespace provsumm {

// Every annotated derivation for a question, with the size of the space the
// enumeration walked. Ground truth for validating the sampling estimates.
struct FullProvenance {
  ProvenanceQuestion question;
  std::vector<AnnotatedDerivation> derivations;  // sorted, duplicate free
  DerivationSpace total_space;
};

// Walks the cross product of per-variable domains for each unifiable rule
// and keeps the comparison-satisfying valuations whose head is absent from
// the query result. Refuses when any rule's product exceeds feasibility_cap;
// sampling is the fallback at that scale.
FullProvenance enumerate_whynot(const Query& q, const Database& db, const PTuple& pt,
                                const DomainOverrides& overrides = {},
                                std::size_t feasibility_cap = 10'000'000);

// Joins each rule against the data to list the successful derivations of the
// matching present tuples. total_space still reports the domain product so
// the two question kinds stay comparable; rules over empty relations
// contribute nothing.
FullProvenance enumerate_why(const Query& q, const Database& db, const PTuple& pt,
                             const DomainOverrides& overrides = {});

// Matched fraction over the complete provenance.
double exact_completeness(const DerivationPattern& p, const FullProvenance& full);

// Exhaustive search over candidate subsets of size 1..k, scoring each by the
// exact union coverage over full and the mean informativeness the candidates
// carry. Same canonical order, pruning, and tie-break as best_first_topk, so
// the two agree whenever the sample estimates are exact. Subset count is
// capped by feasibility_cap. Returned candidates have match_count and
// cp_estimate rebased onto the full provenance.
SummaryResult exact_topk(const std::vector<PatternCandidate>& candidates,
                         const FullProvenance& full, std::size_t k,
                         std::size_t feasibility_cap = 10'000'000);

}  // namespace provsumm
