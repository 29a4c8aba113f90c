#include "provsumm/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

#include "provsumm/errors.hpp"
#include "provsumm/relstore.hpp"

namespace provsumm {

namespace {

bool candidate_order(const PatternCandidate& a, const PatternCandidate& b) {
  if (a.cp_estimate != b.cp_estimate) return a.cp_estimate < b.cp_estimate;
  return pattern_less(a.pattern, b.pattern);
}

Value comparison_side(const Term& t, const Row& row, const Rule& base) {
  if (!t.is_variable) return t.constant;
  const auto idx = base.variable_index(t.name);
  if (!idx) fail(ErrorCode::config, "comparison variable outside rule " + base.id);
  return row[*idx];
}

bool comparisons_hold(const UnifiedRule& u, const Row& row) {
  for (const auto& g : u.body) {
    if (g.kind != Goal::Kind::comparison) continue;
    const Value lhs = comparison_side(g.lhs, row, u.base);
    const Value rhs = comparison_side(g.rhs, row, u.base);
    if (type_of(lhs) != type_of(rhs)) return false;
    if (!compare_values(lhs, g.cmp, rhs)) return false;
  }
  return true;
}

void append_sorted(std::vector<AnnotatedDerivation>& all,
                   std::vector<AnnotatedDerivation> part) {
  all.insert(all.end(), std::make_move_iterator(part.begin()),
             std::make_move_iterator(part.end()));
}

void finish(FullProvenance& full) {
  std::sort(full.derivations.begin(), full.derivations.end(), derivation_less);
  full.derivations.erase(
      std::unique(full.derivations.begin(), full.derivations.end()),
      full.derivations.end());
}

}  // namespace

FullProvenance enumerate_whynot(const Query& q, const Database& db, const PTuple& pt,
                                const DomainOverrides& overrides,
                                std::size_t feasibility_cap) {
  validate_query(q, db);
  if (feasibility_cap == 0) fail(ErrorCode::config, "feasibility cap must be positive");

  FullProvenance full;
  full.question = ProvenanceQuestion{pt, QuestionType::whynot};
  full.total_space = DerivationSpace::zero();

  const std::set<Row> existing = existing_matching_answers(q, db, pt);

  for (const auto& rule : q.rules) {
    UnifiedRule u = unify_with_ptuple(rule, pt);
    if (u.contradiction) continue;
    const auto domains = all_var_domains(u, db, overrides);
    const DerivationSpace space = count_derivation_space(u, domains);
    if (space.saturated || space.exact > static_cast<unsigned __int128>(feasibility_cap))
      fail(ErrorCode::feasibility_cap,
           "derivation space of rule " + rule.id + " (" + space.decimal() +
               ") exceeds the enumeration cap of " + std::to_string(feasibility_cap) +
               "; use the sampling mode instead");
    full.total_space.add(space);

    Row tmpl(rule.variable_order.size());
    std::vector<std::size_t> open;  // positions of unbound variables
    for (std::size_t i = 0; i < rule.variable_order.size(); ++i) {
      const auto bound = u.bindings.find(rule.variable_order[i]);
      if (bound != u.bindings.end()) {
        tmpl[i] = bound->second;
      } else {
        open.push_back(i);
      }
    }
    std::vector<const std::vector<Value>*> cols(open.size());
    for (std::size_t i = 0; i < open.size(); ++i)
      cols[i] = &domains.at(rule.variable_order[open[i]]).values;

    std::vector<Row> missing;
    std::vector<std::size_t> odo(open.size(), 0);
    bool done = false;
    while (!done) {
      Row row = tmpl;
      for (std::size_t i = 0; i < open.size(); ++i) row[open[i]] = (*cols[i])[odo[i]];
      if (comparisons_hold(u, row)) {
        const Row head = instantiate_head(u, row);
        if (matches_ptuple(head, pt) && existing.count(head) == 0)
          missing.push_back(std::move(row));
      }
      done = true;
      for (std::size_t i = open.size(); i-- > 0;) {
        if (++odo[i] < cols[i]->size()) {
          done = false;
          break;
        }
        odo[i] = 0;
      }
      if (open.empty()) break;
    }
    append_sorted(full.derivations, annotate_goals(missing, u, db));
  }

  finish(full);
  return full;
}

FullProvenance enumerate_why(const Query& q, const Database& db, const PTuple& pt,
                             const DomainOverrides& overrides) {
  validate_query(q, db);

  FullProvenance full;
  full.question = ProvenanceQuestion{pt, QuestionType::why};
  full.total_space = DerivationSpace::zero();

  const std::set<Row> existing = existing_matching_answers(q, db, pt);

  for (const auto& rule : q.rules) {
    UnifiedRule u = unify_with_ptuple(rule, pt);
    if (u.contradiction) continue;
    // The space size stays reported for parity with the missing side; a rule
    // over an empty relation has no active domain and contributes nothing.
    try {
      const auto domains = all_var_domains(u, db, overrides);
      full.total_space.add(count_derivation_space(u, domains));
    } catch (const EngineError& e) {
      if (e.code() != ErrorCode::empty_domain) throw;
    }

    std::vector<Row> satisfied;
    for_each_satisfying(u.base, u.body, db, u.bindings,
                        [&](const Row& row) { satisfied.push_back(row); });
    satisfied = filter_existing(std::move(satisfied), u, existing, pt,
                                QuestionType::why);
    append_sorted(full.derivations, annotate_goals(satisfied, u, db));
  }

  finish(full);
  return full;
}

double exact_completeness(const DerivationPattern& p, const FullProvenance& full) {
  if (full.derivations.empty())
    fail(ErrorCode::empty_provenance, "completeness is undefined over empty provenance");
  std::size_t matched = 0;
  for (const auto& d : full.derivations)
    if (pattern_matches(p, d)) ++matched;
  return static_cast<double>(matched) / static_cast<double>(full.derivations.size());
}

SummaryResult exact_topk(const std::vector<PatternCandidate>& candidates,
                         const FullProvenance& full, std::size_t k,
                         std::size_t feasibility_cap) {
  if (k == 0) fail(ErrorCode::config, "summary size must be positive");
  if (feasibility_cap == 0) fail(ErrorCode::config, "feasibility cap must be positive");
  if (full.derivations.empty())
    fail(ErrorCode::empty_provenance, "nothing to summarize: provenance is empty");

  // Same pool as the search: positive-coverage candidates in canonical order.
  std::vector<PatternCandidate> pool;
  for (const auto& c : candidates)
    if (c.cp_estimate > 0.0) pool.push_back(c);
  if (pool.empty())
    fail(ErrorCode::config, "no candidates with positive completeness to summarize");
  std::sort(pool.begin(), pool.end(), candidate_order);
  const std::size_t n = pool.size();
  const std::size_t total = full.derivations.size();

  // Subset count C(n,1) + ... + C(n,k) must stay under the cap.
  {
    long double subsets = 0.0L, binom = 1.0L;
    for (std::size_t s = 1; s <= std::min(k, n); ++s) {
      binom = binom * static_cast<long double>(n - s + 1) / static_cast<long double>(s);
      subsets += binom;
      if (subsets > static_cast<long double>(feasibility_cap))
        fail(ErrorCode::feasibility_cap,
             "exhaustive summary search over " + std::to_string(n) +
                 " candidates exceeds the enumeration cap of " +
                 std::to_string(feasibility_cap));
    }
  }

  const std::size_t words = (total + 63) / 64;
  std::vector<std::vector<std::uint64_t>> packed(n,
                                                 std::vector<std::uint64_t>(words, 0));
  std::vector<std::size_t> solo(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < total; ++d) {
      if (pattern_matches(pool[i].pattern, full.derivations[d])) {
        packed[i][d / 64] |= std::uint64_t{1} << (d % 64);
        ++solo[i];
      }
    }
  }

  // Depth-first over increasing index sequences visits subsets in exactly the
  // tie-break order, so the first best found is the canonical answer.
  std::vector<std::size_t> members, best_members;
  double best_score = -1.0;
  std::vector<std::vector<std::uint64_t>> unions(
      k + 1, std::vector<std::uint64_t>(words, 0));
  std::vector<double> info_sums(k + 1, 0.0);

  auto visit = [&](auto&& self, std::size_t next) -> void {
    const std::size_t depth = members.size();
    if (depth > 0) {
      std::size_t hits = 0;
      for (std::size_t w = 0; w < words; ++w) hits += std::popcount(unions[depth][w]);
      const double cp = static_cast<double>(hits) / static_cast<double>(total);
      const double info = info_sums[depth] / static_cast<double>(depth);
      const double score = harmonic_score(cp, info);
      if (score > best_score) {
        best_score = score;
        best_members = members;
      }
    }
    if (depth == k) return;
    for (std::size_t i = next; i < n; ++i) {
      for (std::size_t w = 0; w < words; ++w)
        unions[depth + 1][w] = unions[depth][w] | packed[i][w];
      info_sums[depth + 1] = info_sums[depth] + pool[i].info;
      members.push_back(i);
      self(self, i + 1);
      members.pop_back();
    }
  };
  visit(visit, 0);

  SummaryResult out;
  for (std::size_t i : best_members) {
    PatternCandidate c = pool[i];
    c.match_count = solo[i];
    c.cp_estimate = static_cast<double>(solo[i]) / static_cast<double>(total);
    c.score = harmonic_score(c.cp_estimate, c.info);
    c.sample_size = total;
    c.matches.assign(total, false);
    for (std::size_t d = 0; d < total; ++d)
      if (packed[i][d / 64] & (std::uint64_t{1} << (d % 64))) c.matches[d] = true;
    out.patterns.push_back(std::move(c));
  }
  std::sort(out.patterns.begin(), out.patterns.end(),
            [](const PatternCandidate& a, const PatternCandidate& b) {
              if (a.cp_estimate != b.cp_estimate) return a.cp_estimate > b.cp_estimate;
              return pattern_less(a.pattern, b.pattern);
            });
  out.score_lb = out.score_ub = best_score;
  out.exact = true;
  return out;
}

}  // namespace provsumm
