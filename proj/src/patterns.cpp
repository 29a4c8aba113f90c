#include "provsumm/patterns.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "provsumm/errors.hpp"

namespace provsumm {

namespace {

bool arg_less(const std::optional<Value>& a, const std::optional<Value>& b) {
  if (a.has_value() != b.has_value()) return !a.has_value();
  if (!a.has_value()) return false;
  return value_less(*a, *b);
}

}  // namespace

std::size_t DerivationPattern::constant_count() const {
  std::size_t n = 0;
  for (const auto& a : args)
    if (a.has_value()) ++n;
  return n;
}

bool pattern_less(const DerivationPattern& a, const DerivationPattern& b) {
  if (a.rule_id != b.rule_id) return a.rule_id < b.rule_id;
  if (a.args != b.args)
    return std::lexicographical_compare(a.args.begin(), a.args.end(),
                                        b.args.begin(), b.args.end(), arg_less);
  return a.goal_annotations < b.goal_annotations;
}

DerivationPattern as_pattern(const AnnotatedDerivation& d) {
  DerivationPattern p;
  p.rule_id = d.rule_id;
  p.args.assign(d.args.begin(), d.args.end());
  p.goal_annotations = d.goal_annotations;
  return p;
}

DerivationPattern lca(const AnnotatedDerivation& a, const AnnotatedDerivation& b) {
  if (a.rule_id != b.rule_id)
    fail(ErrorCode::config, "lca requires derivations of the same rule");
  if (a.goal_annotations != b.goal_annotations)
    fail(ErrorCode::config, "lca requires identical goal annotations");
  if (a.args.size() != b.args.size())
    fail(ErrorCode::config, "lca requires derivations of equal arity");
  DerivationPattern p;
  p.rule_id = a.rule_id;
  p.goal_annotations = a.goal_annotations;
  p.args.reserve(a.args.size());
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (a.args[i] == b.args[i])
      p.args.emplace_back(a.args[i]);
    else
      p.args.emplace_back(std::nullopt);
  }
  return p;
}

bool pattern_matches(const DerivationPattern& p, const AnnotatedDerivation& d) {
  if (p.rule_id != d.rule_id) return false;
  if (p.goal_annotations != d.goal_annotations) return false;
  if (p.args.size() != d.args.size()) return false;
  for (std::size_t i = 0; i < p.args.size(); ++i)
    if (p.args[i].has_value() && !(*p.args[i] == d.args[i])) return false;
  return true;
}

std::vector<DerivationPattern> generate_candidates(const SampleSet& s) {
  const std::vector<AnnotatedDerivation> sample = s.flattened();
  std::map<std::pair<std::string, std::vector<bool>>, std::vector<std::size_t>>
      classes;
  for (std::size_t i = 0; i < sample.size(); ++i)
    classes[{sample[i].rule_id, sample[i].goal_annotations}].push_back(i);

  std::set<DerivationPattern, bool (*)(const DerivationPattern&,
                                       const DerivationPattern&)>
      uniq(&pattern_less);
  for (const auto& [key, members] : classes)
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i; j < members.size(); ++j)
        uniq.insert(lca(sample[members[i]], sample[members[j]]));
  return {uniq.begin(), uniq.end()};
}

std::vector<PatternCandidate> estimate_completeness(
    const std::vector<DerivationPattern>& candidates, const SampleSet& s) {
  const std::vector<AnnotatedDerivation> sample = s.flattened();
  if (sample.empty())
    fail(ErrorCode::config, "completeness estimation needs a non-empty sample");
  std::vector<PatternCandidate> out;
  out.reserve(candidates.size());
  for (const DerivationPattern& p : candidates) {
    PatternCandidate c;
    c.pattern = p;
    c.sample_size = sample.size();
    c.matches.resize(sample.size(), false);
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (pattern_matches(p, sample[i])) {
        c.matches[i] = true;
        ++c.match_count;
      }
    }
    c.cp_estimate =
        static_cast<double>(c.match_count) / static_cast<double>(sample.size());
    out.push_back(std::move(c));
  }
  return out;
}

double informativeness(const DerivationPattern& p, const PTuple& pt) {
  const std::size_t arity = p.args.size();
  const std::size_t fixed = pt.constant_count();
  if (fixed >= arity) return 0.0;
  const double raw = (static_cast<double>(p.constant_count()) -
                      static_cast<double>(fixed)) /
                     static_cast<double>(arity - fixed);
  return std::clamp(raw, 0.0, 1.0);
}

double harmonic_score(double cp, double info) {
  if (cp <= 0.0 || info <= 0.0) return 0.0;
  return 2.0 * cp * info / (cp + info);
}

void score_candidates(std::vector<PatternCandidate>& candidates, const PTuple& pt) {
  for (PatternCandidate& c : candidates) {
    c.info = informativeness(c.pattern, pt);
    c.score = harmonic_score(c.cp_estimate, c.info);
  }
}

}  // namespace provsumm
