#include "provsumm/sampling.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "provsumm/errors.hpp"

namespace provsumm {

namespace {

constexpr std::uint64_t kDrawTag = 0xa0761d6478bd642full;
constexpr std::uint64_t kTruncateTag = 0xe7037ed1a0b428dbull;
constexpr std::uint64_t kWhyTag = 0x8ebc6af09c88c6e3ull;

constexpr unsigned __int128 kU128Max = ~static_cast<unsigned __int128>(0);

std::uint64_t mix64(std::uint64_t v) {
  v ^= v >> 30;
  v *= 0xbf58476d1ce4e5b9ull;
  v ^= v >> 27;
  v *= 0x94d049bb133111ebull;
  v ^= v >> 31;
  return v;
}

// Unbiased selection in [0, n); rejection keeps every residue equally likely.
std::uint64_t uniform_index(std::mt19937_64& eng, std::uint64_t n) {
  assert(n > 0);
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t v = eng();
    if (v >= threshold) return v % n;
  }
}

// k distinct positions out of n, uniform, returned in increasing order.
std::vector<std::size_t> choose_indices(std::size_t n, std::size_t k,
                                        std::uint64_t stream) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 eng(stream);
  for (std::size_t j = 0; j < k; ++j)
    std::swap(idx[j], idx[j + uniform_index(eng, n - j)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double logadd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// P[Binomial(n, p) >= s] >= success_prob, evaluated through the lower tail in
// log space: the tail mass 1 - success_prob is small exactly when it matters.
bool survival_at_least(std::size_t n, std::size_t s, double p, double success_prob) {
  if (n < s) return false;
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  double log_term = static_cast<double>(n) * logq;  // i = 0
  double log_cdf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s; ++i) {
    log_cdf = logadd(log_cdf, log_term);
    log_term += std::log(static_cast<double>(n - i) / static_cast<double>(i + 1)) +
                logp - logq;
  }
  return log_cdf <= std::log1p(-success_prob);
}

struct ResolvedTerm {
  bool is_const = false;
  Value constant;
  std::size_t slot = 0;  // index into variable_order when !is_const
};

ResolvedTerm resolve_term(const Rule& base, const Term& t) {
  ResolvedTerm r;
  if (!t.is_variable) {
    r.is_const = true;
    r.constant = t.constant;
    return r;
  }
  auto idx = base.variable_index(t.name);
  if (!idx)
    fail(ErrorCode::config, "variable " + t.name + " is not part of rule " + base.id);
  r.slot = *idx;
  return r;
}

const Value& term_value(const ResolvedTerm& t, const Row& valuation) {
  return t.is_const ? t.constant : valuation[t.slot];
}

}  // namespace

bool derivation_less(const AnnotatedDerivation& a, const AnnotatedDerivation& b) {
  if (a.rule_id != b.rule_id) return a.rule_id < b.rule_id;
  if (a.args != b.args) return row_less(a.args, b.args);
  return a.goal_annotations < b.goal_annotations;
}

void DerivationSpace::multiply(std::uint64_t factor) {
  approx *= static_cast<long double>(factor);
  if (saturated) return;
  if (factor == 0) {
    exact = 0;
    return;
  }
  if (exact > kU128Max / factor) {
    saturated = true;
    return;
  }
  exact *= factor;
}

void DerivationSpace::add(const DerivationSpace& other) {
  approx += other.approx;
  if (saturated || other.saturated) {
    saturated = true;
    return;
  }
  if (exact > kU128Max - other.exact) {
    saturated = true;
    return;
  }
  exact += other.exact;
}

DerivationSpace DerivationSpace::zero() {
  DerivationSpace s;
  s.approx = 0.0L;
  s.exact = 0;
  return s;
}

double DerivationSpace::log10_value() const {
  if (approx <= 0.0L) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(std::log10(approx));
}

std::string DerivationSpace::decimal() const {
  if (saturated) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(4) << approx;
    return os.str();
  }
  if (exact == 0) return "0";
  unsigned __int128 v = exact;
  std::string s;
  while (v != 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

std::vector<AnnotatedDerivation> SampleSet::flattened() const {
  std::vector<AnnotatedDerivation> out;
  for (const auto& rs : per_rule)
    out.insert(out.end(), rs.derivations.begin(), rs.derivations.end());
  return out;
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                            std::uint64_t c) {
  std::uint64_t x = seed;
  x = mix64(x + 0x9e3779b97f4a7c15ull);
  x = mix64(x + a * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull);
  x = mix64(x + b * 0x9e3779b97f4a7c15ull + 0x8cb92ba72f3d8dd7ull);
  x = mix64(x + c * 0x9e3779b97f4a7c15ull + 0xeb44accab455d165ull);
  return x;
}

DerivationSpace count_derivation_space(const UnifiedRule& u,
                                       const std::map<std::string, VarDomain>& domains) {
  DerivationSpace s;
  for (const auto& v : u.unbound_vars) s.multiply(domains.at(v).values.size());
  return s;
}

DerivationSpace count_existing_derivations(
    const UnifiedRule& u, const std::map<std::string, VarDomain>& domains,
    const std::set<Row>& existing) {
  DerivationSpace total = DerivationSpace::zero();
  for (const Row& t : existing) {
    if (t.size() != u.head.args.size()) continue;
    // answer columns pin head variables; the rest of the space is free
    std::map<std::string, Value> pinned;
    bool compatible = true;
    for (std::size_t i = 0; i < t.size() && compatible; ++i) {
      const Term& h = u.head.args[i];
      if (!h.is_variable) {
        compatible = h.constant == t[i];
      } else {
        auto [it, inserted] = pinned.emplace(h.name, t[i]);
        if (!inserted) compatible = it->second == t[i];
      }
    }
    if (!compatible) continue;
    DerivationSpace per;
    for (const auto& v : u.unbound_vars) {
      const auto& dom = domains.at(v).values;
      auto it = pinned.find(v);
      if (it == pinned.end()) {
        per.multiply(dom.size());
      } else if (!std::binary_search(dom.begin(), dom.end(), it->second, value_less)) {
        compatible = false;
        break;
      }
    }
    if (compatible) total.add(per);
  }
  return total;
}

double rule_p_prov(const UnifiedRule& u,
                   const std::map<std::string, VarDomain>& domains,
                   const std::set<Row>& existing) {
  const DerivationSpace space = count_derivation_space(u, domains);
  const DerivationSpace present = count_existing_derivations(u, domains, existing);
  if (space.approx <= 0.0L) return 0.0;
  const long double p = 1.0L - present.approx / space.approx;
  return static_cast<double>(std::clamp(p, 0.0L, 1.0L));
}

double estimate_p_prov(const Query& q, const Database& db,
                       const ProvenanceQuestion& question,
                       const DomainOverrides& overrides) {
  validate_query(q, db);
  const std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
  DerivationSpace space = DerivationSpace::zero();
  DerivationSpace present = DerivationSpace::zero();
  for (const Rule& r : q.rules) {
    const UnifiedRule u = unify_with_ptuple(r, question.ptuple);
    if (u.contradiction) continue;
    const auto domains = all_var_domains(u, db, overrides);
    space.add(count_derivation_space(u, domains));
    present.add(count_existing_derivations(u, domains, existing));
  }
  if (space.approx <= 0.0L) return 0.0;
  const long double p = 1.0L - present.approx / space.approx;
  return static_cast<double>(std::clamp(p, 0.0L, 1.0L));
}

std::size_t required_oversample_size(double p_prov, std::size_t target,
                                     double success_prob, std::size_t cap) {
  if (target == 0) fail(ErrorCode::config, "sample size must be positive");
  if (!(p_prov > 0.0) || p_prov > 1.0)
    fail(ErrorCode::config, "per-draw success probability must be in (0, 1]");
  if (!(success_prob > 0.0 && success_prob < 1.0))
    fail(ErrorCode::config, "success probability must be in (0, 1)");
  auto over_cap = [&]() -> std::size_t {
    fail(ErrorCode::oversample_cap,
         "oversample size exceeds cap " + std::to_string(cap) +
             "; raise the cap or lower the sample size");
  };
  if (target > cap) over_cap();
  if (p_prov >= 1.0) return target;

  auto ok = [&](std::size_t n) {
    return survival_at_least(n, target, p_prov, success_prob);
  };
  if (ok(target)) return target;
  std::size_t lo = target;  // known failing
  std::size_t hi = target;
  for (;;) {
    if (hi >= cap) over_cap();
    hi = (hi > cap / 2) ? cap : hi * 2;
    if (ok(hi)) break;
    lo = hi;
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double selectivity_compensation(const UnifiedRule& u, double cap) {
  double m = 1.0;
  for (const Goal& g : u.body) {
    if (g.kind != Goal::Kind::comparison) continue;
    if (!g.lhs.is_variable || !g.rhs.is_variable) continue;
    if (g.cmp != Comparator::ne) m *= 2.0;
  }
  return std::min(m, cap);
}

std::vector<std::vector<Value>> draw_columns(
    const UnifiedRule& u, const std::map<std::string, VarDomain>& domains,
    std::size_t n_os, std::uint64_t seed, std::uint64_t rule_salt,
    std::uint64_t attempt) {
  std::vector<std::vector<Value>> cols;
  cols.reserve(u.unbound_vars.size());
  for (std::size_t vi = 0; vi < u.unbound_vars.size(); ++vi) {
    const auto& dom = domains.at(u.unbound_vars[vi]).values;
    if (dom.empty())
      fail(ErrorCode::empty_domain,
           "variable " + u.unbound_vars[vi] + " has an empty domain");
    std::mt19937_64 eng(derive_stream(seed ^ kDrawTag, rule_salt, vi, attempt));
    std::vector<Value> col;
    col.reserve(n_os);
    for (std::size_t j = 0; j < n_os; ++j)
      col.push_back(dom[uniform_index(eng, dom.size())]);
    cols.push_back(std::move(col));
  }
  return cols;
}

std::vector<Row> zip_bindings(const UnifiedRule& u,
                              const std::vector<std::vector<Value>>& columns) {
  const auto& vars = u.unbound_vars;
  if (columns.size() != vars.size())
    fail(ErrorCode::config, "zip expects one column per unbound variable");

  Row tmpl(u.base.variable_order.size());
  for (std::size_t i = 0; i < u.base.variable_order.size(); ++i) {
    auto it = u.bindings.find(u.base.variable_order[i]);
    if (it != u.bindings.end()) tmpl[i] = it->second;
  }

  std::vector<std::tuple<ResolvedTerm, Comparator, ResolvedTerm>> comps;
  for (const Goal& g : u.body)
    if (g.kind == Goal::Kind::comparison)
      comps.emplace_back(resolve_term(u.base, g.lhs), g.cmp,
                         resolve_term(u.base, g.rhs));
  auto satisfies = [&](const Row& row) {
    for (const auto& [lhs, cmp, rhs] : comps)
      if (!compare_values(term_value(lhs, row), cmp, term_value(rhs, row)))
        return false;
    return true;
  };

  if (vars.empty()) {
    // fully bound rule: the space holds exactly one valuation
    std::vector<Row> out;
    if (satisfies(tmpl)) out.push_back(tmpl);
    return out;
  }

  const std::size_t n = columns[0].size();
  for (const auto& c : columns)
    if (c.size() != n) fail(ErrorCode::config, "zip columns must share one length");

  std::vector<std::size_t> slots(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i)
    slots[i] = *u.base.variable_index(vars[i]);

  std::vector<Row> out;
  out.reserve(n);
  Row row = tmpl;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < vars.size(); ++i) row[slots[i]] = columns[i][j];
    if (satisfies(row)) out.push_back(row);
  }
  return out;
}

std::vector<Row> draw_bindings(const UnifiedRule& u,
                               const std::map<std::string, VarDomain>& domains,
                               std::size_t n_os, std::uint64_t seed,
                               std::uint64_t rule_salt, std::uint64_t attempt) {
  return zip_bindings(u, draw_columns(u, domains, n_os, seed, rule_salt, attempt));
}

Row instantiate_head(const UnifiedRule& u, const Row& valuation) {
  Row h;
  h.reserve(u.head.args.size());
  for (const Term& t : u.head.args) {
    if (!t.is_variable) {
      h.push_back(t.constant);
      continue;
    }
    auto idx = u.base.variable_index(t.name);
    if (!idx)
      fail(ErrorCode::config,
           "head variable " + t.name + " is not part of rule " + u.base.id);
    h.push_back(valuation[*idx]);
  }
  return h;
}

std::vector<Row> filter_existing(std::vector<Row> valuations, const UnifiedRule& u,
                                 const std::set<Row>& existing, const PTuple& pt,
                                 QuestionType qtype) {
  std::vector<Row> out;
  out.reserve(valuations.size());
  const bool keep_present = qtype == QuestionType::why;
  for (auto& v : valuations) {
    const Row head = instantiate_head(u, v);
    if (!matches_ptuple(head, pt)) continue;
    if ((existing.count(head) > 0) == keep_present) out.push_back(std::move(v));
  }
  return out;
}

std::vector<AnnotatedDerivation> annotate_goals(const std::vector<Row>& valuations,
                                                const UnifiedRule& u,
                                                const Database& db) {
  struct GoalPlan {
    const Relation* rel;
    bool negated;
    std::vector<ResolvedTerm> cols;
  };
  std::vector<GoalPlan> plans;
  for (const Goal& g : u.body) {
    if (!g.is_literal()) continue;
    GoalPlan p;
    p.rel = &db.relation(g.atom.predicate);
    p.negated = g.kind == Goal::Kind::negated;
    for (const Term& t : g.atom.args) p.cols.push_back(resolve_term(u.base, t));
    plans.push_back(std::move(p));
  }

  std::vector<AnnotatedDerivation> out;
  out.reserve(valuations.size());
  Row probe;
  for (const Row& v : valuations) {
    AnnotatedDerivation d;
    d.rule_id = u.base.id;
    d.args = v;
    d.goal_annotations.reserve(plans.size());
    for (const GoalPlan& p : plans) {
      probe.clear();
      for (const ResolvedTerm& c : p.cols) probe.push_back(term_value(c, v));
      const bool present = p.rel->contains(probe);
      d.goal_annotations.push_back(p.negated ? !present : present);
    }
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), derivation_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void truncate_uniform(std::vector<AnnotatedDerivation>& derivations,
                      std::size_t target, std::uint64_t stream) {
  if (derivations.size() <= target) return;
  const auto keep = choose_indices(derivations.size(), target, stream);
  std::vector<AnnotatedDerivation> kept;
  kept.reserve(target);
  for (std::size_t i : keep) kept.push_back(std::move(derivations[i]));
  derivations = std::move(kept);  // keep indices ascend, order stays sorted
}

SampleSet sample_why(const Query& q, const Database& db,
                     const ProvenanceQuestion& question, const SampleConfig& config,
                     const std::set<Row>& existing) {
  SampleSet out;
  out.qtype = QuestionType::why;
  out.target_size = config.target_size;
  out.p_prov_estimate = 1.0;
  std::size_t total = 0;
  for (const Rule& r : q.rules) {
    RuleSample rs;
    rs.rule_id = r.id;
    rs.p_prov = 1.0;
    rs.space = DerivationSpace::zero();
    rs.attempts = 1;
    const UnifiedRule u = unify_with_ptuple(r, question.ptuple);
    if (!u.contradiction) {
      std::vector<Row> vals;
      for_each_satisfying(u.base, u.body, db, u.bindings,
                          [&](const Row& row) { vals.push_back(row); });
      vals = filter_existing(std::move(vals), u, existing, question.ptuple,
                             QuestionType::why);
      rs.derivations = annotate_goals(vals, u, db);
    }
    total += rs.derivations.size();
    out.per_rule.push_back(std::move(rs));
  }
  if (total == 0)
    fail(ErrorCode::empty_provenance,
         "question has empty provenance of the requested type");

  if (total > config.target_size) {
    const auto keep = choose_indices(
        total, config.target_size, derive_stream(config.rng_seed ^ kWhyTag, 0, 0, 0));
    auto keep_it = keep.begin();
    std::size_t offset = 0;
    for (auto& rs : out.per_rule) {
      std::vector<AnnotatedDerivation> kept;
      for (std::size_t i = 0; i < rs.derivations.size(); ++i) {
        if (keep_it != keep.end() && *keep_it == offset + i) {
          kept.push_back(std::move(rs.derivations[i]));
          ++keep_it;
        }
      }
      offset += rs.derivations.size();
      rs.derivations = std::move(kept);
    }
    total = config.target_size;
  } else {
    out.shortfall = total < config.target_size;
  }
  out.achieved_size = total;
  return out;
}

SampleSet sample_whynot(const Query& q, const Database& db,
                        const ProvenanceQuestion& question,
                        const SampleConfig& config, const DomainOverrides& overrides,
                        const std::set<Row>& existing) {
  SampleSet out;
  out.qtype = QuestionType::whynot;
  out.target_size = config.target_size;

  DerivationSpace agg_space = DerivationSpace::zero();
  DerivationSpace agg_present = DerivationSpace::zero();
  bool any_feasible = false;
  bool any_positive = false;

  for (std::size_t ri = 0; ri < q.rules.size(); ++ri) {
    RuleSample rs;
    rs.rule_id = q.rules[ri].id;
    const UnifiedRule u = unify_with_ptuple(q.rules[ri], question.ptuple);
    if (u.contradiction) {
      rs.space = DerivationSpace::zero();
      out.per_rule.push_back(std::move(rs));
      continue;
    }
    any_feasible = true;
    const auto domains = all_var_domains(u, db, overrides);
    rs.space = count_derivation_space(u, domains);
    const DerivationSpace present = count_existing_derivations(u, domains, existing);
    agg_space.add(rs.space);
    agg_present.add(present);
    rs.p_prov = rs.space.approx > 0.0L
                    ? static_cast<double>(std::clamp(
                          1.0L - present.approx / rs.space.approx, 0.0L, 1.0L))
                    : 0.0;
    if (rs.p_prov <= 0.0) {
      out.per_rule.push_back(std::move(rs));
      continue;
    }
    any_positive = true;
    rs.selectivity_multiplier = selectivity_compensation(u, config.selectivity_cap);

    const std::size_t base_n = required_oversample_size(
        rs.p_prov, config.target_size, config.success_prob, config.max_oversample);
    const long double scaled =
        std::ceil(static_cast<long double>(base_n) * rs.selectivity_multiplier);
    if (scaled > static_cast<long double>(config.max_oversample))
      fail(ErrorCode::oversample_cap,
           "oversample size exceeds cap " + std::to_string(config.max_oversample) +
               "; raise the cap or lower the sample size");
    std::size_t n_os = static_cast<std::size_t>(scaled);

    for (std::uint64_t attempt = 0;; ++attempt) {
      rs.attempts = static_cast<int>(attempt) + 1;
      auto vals = draw_bindings(u, domains, n_os, config.rng_seed, ri, attempt);
      vals = filter_existing(std::move(vals), u, existing, question.ptuple,
                             QuestionType::whynot);
      rs.derivations = annotate_goals(vals, u, db);
      if (rs.derivations.size() >= config.target_size ||
          attempt >= static_cast<std::uint64_t>(config.retry_limit))
        break;
      // retries redraw from scratch; the doubled draw is clamped to the cap
      n_os = (n_os > config.max_oversample / 2) ? config.max_oversample : n_os * 2;
    }
    rs.oversample_size = n_os;
    out.oversample_size_used += n_os;
    truncate_uniform(
        rs.derivations, config.target_size,
        derive_stream(config.rng_seed ^ kTruncateTag, ri,
                      static_cast<std::uint64_t>(rs.attempts), 0));
    out.per_rule.push_back(std::move(rs));
  }

  if (!any_feasible || !any_positive)
    fail(ErrorCode::empty_provenance,
         "question has empty provenance of the requested type");

  out.p_prov_estimate =
      agg_space.approx > 0.0L
          ? static_cast<double>(std::clamp(
                1.0L - agg_present.approx / agg_space.approx, 0.0L, 1.0L))
          : 0.0;
  for (const auto& rs : out.per_rule) {
    out.achieved_size += rs.derivations.size();
    if (rs.p_prov > 0.0 && rs.derivations.size() < config.target_size)
      out.shortfall = true;
  }
  if (out.achieved_size == 0)
    fail(ErrorCode::oversample_cap,
         "no derivations survived sampling after retries; raise the oversample cap "
         "or lower the sample size");
  return out;
}

}  // namespace

SampleSet sample(const Query& q, const Database& db,
                 const ProvenanceQuestion& question, const SampleConfig& config,
                 const DomainOverrides& overrides) {
  validate_query(q, db);
  if (config.target_size == 0) fail(ErrorCode::config, "sample size must be positive");
  if (!(config.success_prob > 0.0 && config.success_prob < 1.0))
    fail(ErrorCode::config, "success probability must be in (0, 1)");
  if (config.retry_limit < 0) fail(ErrorCode::config, "retry limit must be >= 0");
  const std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
  return question.qtype == QuestionType::why
             ? sample_why(q, db, question, config, existing)
             : sample_whynot(q, db, question, config, overrides, existing);
}

}  // namespace provsumm
