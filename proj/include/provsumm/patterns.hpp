#pragma once

#include <optional>
#include <string>
#include <vector>

#include "provsumm/datalog.hpp"
#include "provsumm/sampling.hpp"

namespace provsumm {

// Constants-or-placeholders over a rule's variables plus the goal flags.
// A placeholder is the absent value; placeholders never repeat inside one
// pattern, so matching needs no consistency bookkeeping.
struct DerivationPattern {
  std::string rule_id;
  std::vector<std::optional<Value>> args;  // aligned with variable_order
  std::vector<bool> goal_annotations;

  bool operator==(const DerivationPattern&) const = default;
  std::size_t constant_count() const;
};

bool pattern_less(const DerivationPattern& a, const DerivationPattern& b);

DerivationPattern as_pattern(const AnnotatedDerivation& d);

// Least common abstraction of two derivations with the same rule and flags:
// agreeing positions keep their constant, disagreeing ones open up.
DerivationPattern lca(const AnnotatedDerivation& a, const AnnotatedDerivation& b);

bool pattern_matches(const DerivationPattern& p, const AnnotatedDerivation& d);

// Pairwise (and self) LCA within each rule+annotation class, deduplicated,
// in canonical order.
std::vector<DerivationPattern> generate_candidates(const SampleSet& s);

struct PatternCandidate {
  DerivationPattern pattern;
  std::size_t match_count = 0;
  double cp_estimate = 0.0;
  double info = 0.0;
  double score = 0.0;
  std::vector<bool> matches;  // aligned with SampleSet::flattened()
  std::size_t sample_size = 0;
};

// cp_estimate = matched fraction of the whole multi-rule sample.
std::vector<PatternCandidate> estimate_completeness(
    const std::vector<DerivationPattern>& candidates, const SampleSet& s);

// Share of a pattern's constants beyond those the question already fixes.
double informativeness(const DerivationPattern& p, const PTuple& pt);

double harmonic_score(double cp, double info);

// Fills info and score for candidates that already carry cp_estimate.
void score_candidates(std::vector<PatternCandidate>& candidates, const PTuple& pt);

}  // namespace provsumm
