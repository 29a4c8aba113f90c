#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "provsumm/datalog.hpp"
#include "provsumm/relstore.hpp"

namespace provsumm {

// One member of the derivation space: constants for every rule variable plus
// one truth flag per literal goal (comparisons carry no flag; valuations that
// violate a comparison are not derivations at all).
struct AnnotatedDerivation {
  std::string rule_id;
  Row args;  // aligned with the rule's variable_order
  std::vector<bool> goal_annotations;

  bool operator==(const AnnotatedDerivation&) const = default;
};

bool derivation_less(const AnnotatedDerivation& a, const AnnotatedDerivation& b);

// Saturating product/sum counter; approx stays usable past 128 bits.
struct DerivationSpace {
  long double approx = 1.0L;
  unsigned __int128 exact = 1;
  bool saturated = false;

  void multiply(std::uint64_t factor);
  void add(const DerivationSpace& other);
  static DerivationSpace zero();

  double to_double() const { return static_cast<double>(approx); }
  double log10_value() const;
  std::string decimal() const;
};

struct SampleConfig {
  std::size_t target_size = 1000;
  double success_prob = 0.999;
  std::uint64_t rng_seed = 1;
  std::size_t max_oversample = 5'000'000;
  int retry_limit = 3;
  double selectivity_cap = 16.0;
};

struct RuleSample {
  std::string rule_id;
  double p_prov = 0.0;
  double selectivity_multiplier = 1.0;
  std::size_t oversample_size = 0;  // final N_os after any retries
  int attempts = 0;
  DerivationSpace space;
  std::vector<AnnotatedDerivation> derivations;  // sorted, duplicate-free
};

struct SampleSet {
  QuestionType qtype = QuestionType::whynot;
  std::vector<RuleSample> per_rule;  // query rule order
  std::size_t target_size = 0;
  std::size_t achieved_size = 0;
  double p_prov_estimate = 0.0;
  std::size_t oversample_size_used = 0;  // summed over rules
  bool shortfall = false;

  std::vector<AnnotatedDerivation> flattened() const;
};

// Derived, deterministic RNG streams: one per (rule, variable, attempt), so a
// draw for one variable never perturbs another's sequence.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c);

// |domain_X1| x ... x |domain_Xu| over the unbound variables. Variable-variable
// comparisons are not discounted here; see selectivity_compensation.
DerivationSpace count_derivation_space(const UnifiedRule& u,
                                       const std::map<std::string, VarDomain>& domains);

// Derivations of existing matching answers, summed per answer: head positions
// must fit the tuple and stay inside their domains, body-only variables range
// over their whole domains.
DerivationSpace count_existing_derivations(
    const UnifiedRule& u, const std::map<std::string, VarDomain>& domains,
    const std::set<Row>& existing);

double rule_p_prov(const UnifiedRule& u,
                   const std::map<std::string, VarDomain>& domains,
                   const std::set<Row>& existing);

// Aggregate missing-fraction across rules: 1 - sum(existing)/sum(space).
double estimate_p_prov(const Query& q, const Database& db,
                       const ProvenanceQuestion& question,
                       const DomainOverrides& overrides);

// Minimal N >= target with P[Binomial(N, p_prov) >= target] >= success_prob.
std::size_t required_oversample_size(double p_prov, std::size_t target,
                                     double success_prob, std::size_t cap);

// Each variable-variable order predicate halves the expected survivors, so the
// draw is doubled; inequality keeps nearly everything. Capped multiplier.
double selectivity_compensation(const UnifiedRule& u, double cap);

std::vector<std::vector<Value>> draw_columns(
    const UnifiedRule& u, const std::map<std::string, VarDomain>& domains,
    std::size_t n_os, std::uint64_t seed, std::uint64_t rule_salt,
    std::uint64_t attempt);

// Positional zip of per-variable columns into full-arity valuations; rows
// violating any comparison goal are dropped.
std::vector<Row> zip_bindings(const UnifiedRule& u,
                              const std::vector<std::vector<Value>>& columns);

std::vector<Row> draw_bindings(const UnifiedRule& u,
                               const std::map<std::string, VarDomain>& domains,
                               std::size_t n_os, std::uint64_t seed,
                               std::uint64_t rule_salt, std::uint64_t attempt);

// Heads must stay consistent with the question tuple (repeated placeholders
// force equal columns). Of those, WHYNOT keeps valuations whose induced head
// is absent from the existing matching answers; WHY keeps the present ones.
std::vector<Row> filter_existing(std::vector<Row> valuations, const UnifiedRule& u,
                                 const std::set<Row>& existing, const PTuple& pt,
                                 QuestionType qtype);

Row instantiate_head(const UnifiedRule& u, const Row& valuation);

// Truth flag per literal goal; negated goals are true when the tuple is absent.
// Output is sorted and duplicate-free (set semantics).
std::vector<AnnotatedDerivation> annotate_goals(const std::vector<Row>& valuations,
                                                const UnifiedRule& u,
                                                const Database& db);

SampleSet sample(const Query& q, const Database& db,
                 const ProvenanceQuestion& question, const SampleConfig& config,
                 const DomainOverrides& overrides = {});

}  // namespace provsumm
