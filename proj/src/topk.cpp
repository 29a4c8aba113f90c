#include "provsumm/topk.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>

#include "provsumm/errors.hpp"

namespace provsumm {

namespace {

// Slack for the optimality witness; bound arithmetic reorders additions, so
// equal scores can land an ulp apart.
constexpr double kBoundEps = 1e-12;

bool candidate_order(const PatternCandidate& a, const PatternCandidate& b) {
  if (a.cp_estimate != b.cp_estimate) return a.cp_estimate < b.cp_estimate;
  return pattern_less(a.pattern, b.pattern);
}

std::pair<double, double> structural_cp_bounds(
    const std::vector<PatternCandidate>& pool,
    const std::vector<std::size_t>& members) {
  const std::size_t n = members.size();
  if (n == 0) return {0.0, 0.0};

  double best_single = 0.0;
  for (std::size_t i : members) best_single = std::max(best_single, pool[i].cp_estimate);

  // A member abstracted by another member contributes nothing extra on top.
  double ub = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bool abstracted = false;
    for (std::size_t j = 0; j < n && !abstracted; ++j) {
      if (i == j) continue;
      abstracted = generalizes(pool[members[i]].pattern, pool[members[j]].pattern);
    }
    if (!abstracted) ub += pool[members[i]].cp_estimate;
  }
  ub = std::min(1.0, ub);

  std::vector<std::vector<bool>> dis(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dis[i][j] = dis[j][i] =
          disjoint(pool[members[i]].pattern, pool[members[j]].pattern);

  double lb = best_single;
  if (n <= 10) {
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      double sum = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        if (!(mask & (1u << i))) continue;
        for (std::size_t j = i + 1; j < n && ok; ++j)
          if ((mask & (1u << j)) && !dis[i][j]) ok = false;
        sum += pool[members[i]].cp_estimate;
      }
      if (ok) lb = std::max(lb, sum);
    }
  } else {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double ca = pool[members[a]].cp_estimate, cb = pool[members[b]].cp_estimate;
      if (ca != cb) return ca > cb;
      return pattern_less(pool[members[a]].pattern, pool[members[b]].pattern);
    });
    std::vector<std::size_t> taken;
    double sum = 0.0;
    for (std::size_t i : order) {
      bool ok = true;
      for (std::size_t t : taken)
        if (!dis[i][t]) { ok = false; break; }
      if (ok) {
        taken.push_back(i);
        sum += pool[members[i]].cp_estimate;
      }
    }
    lb = std::max(lb, sum);
  }

  lb = std::min({lb, ub, 1.0});
  return {lb, ub};
}

// Shared by the public score_bounds and the search. The upper bound must
// dominate the set itself and every canonical extension of it, hence the
// max over how many optimistic members get added.
std::pair<double, double> bound_scores(double cp_lb, double cp_ub, double info_sum,
                                       std::size_t size, std::size_t k,
                                       std::size_t addable, double pool_max_cp,
                                       double pool_max_info) {
  const double info_now = info_sum / static_cast<double>(size);
  const double lb = harmonic_score(cp_lb, info_now);

  const std::size_t slots = k > size ? std::min(k - size, addable) : 0;
  double ub = harmonic_score(cp_ub, info_now);
  for (std::size_t j = 1; j <= slots; ++j) {
    const double cp = std::min(1.0, cp_ub + static_cast<double>(j) * pool_max_cp);
    const double info =
        (info_sum + static_cast<double>(j) * pool_max_info) / static_cast<double>(size + j);
    ub = std::max(ub, harmonic_score(cp, info));
  }
  return {lb, ub};
}

struct SearchNode {
  std::vector<std::size_t> members;
  double cp_lb = 0.0;
  double cp_ub = 0.0;
  double score_lb = 0.0;
  double score_ub = 0.0;
  bool complete = false;
};

SummaryResult assemble(const std::vector<PatternCandidate>& pool,
                       const SearchNode& node, bool exact) {
  SummaryResult out;
  for (std::size_t i : node.members) out.patterns.push_back(pool[i]);
  std::sort(out.patterns.begin(), out.patterns.end(),
            [](const PatternCandidate& a, const PatternCandidate& b) {
              if (a.cp_estimate != b.cp_estimate) return a.cp_estimate > b.cp_estimate;
              return pattern_less(a.pattern, b.pattern);
            });
  out.score_lb = node.score_lb;
  out.score_ub = node.score_ub;
  out.exact = exact;
  return out;
}

}  // namespace

bool generalizes(const DerivationPattern& specific, const DerivationPattern& general) {
  if (specific.rule_id != general.rule_id) return false;
  if (specific.goal_annotations != general.goal_annotations) return false;
  if (specific.args.size() != general.args.size()) return false;
  for (std::size_t i = 0; i < general.args.size(); ++i) {
    if (!general.args[i].has_value()) continue;
    if (!specific.args[i].has_value() || *specific.args[i] != *general.args[i])
      return false;
  }
  return true;
}

bool disjoint(const DerivationPattern& a, const DerivationPattern& b) {
  if (a.rule_id != b.rule_id) return true;
  if (a.goal_annotations != b.goal_annotations) return true;
  if (a.args.size() != b.args.size()) return true;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (a.args[i].has_value() && b.args[i].has_value() && *a.args[i] != *b.args[i])
      return true;
  }
  return false;
}

std::pair<double, double> cp_bounds(const std::vector<PatternCandidate>& set) {
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) all[i] = i;
  return structural_cp_bounds(set, all);
}

std::pair<double, double> score_bounds(const CandidateSet& set,
                                       const std::vector<PatternCandidate>& candidates,
                                       std::size_t k) {
  if (set.members.empty()) fail(ErrorCode::config, "score_bounds needs a non-empty set");
  double info_sum = 0.0;
  for (std::size_t i : set.members) {
    if (i >= candidates.size()) fail(ErrorCode::config, "set member out of range");
    info_sum += candidates[i].info;
  }
  const std::size_t start = set.members.back() + 1;
  double max_cp = 0.0, max_info = 0.0;
  for (std::size_t i = start; i < candidates.size(); ++i) {
    max_cp = std::max(max_cp, candidates[i].cp_estimate);
    max_info = std::max(max_info, candidates[i].info);
  }
  const std::size_t addable = candidates.size() > start ? candidates.size() - start : 0;
  return bound_scores(set.cp_lb, set.cp_ub, info_sum, set.members.size(), k, addable,
                      max_cp, max_info);
}

SummaryResult best_first_topk(const std::vector<PatternCandidate>& candidates,
                              std::size_t k, std::size_t node_budget) {
  if (k == 0) fail(ErrorCode::config, "summary size must be positive");
  if (node_budget == 0) fail(ErrorCode::config, "node budget must be positive");

  std::vector<PatternCandidate> pool;
  for (const auto& c : candidates)
    if (c.cp_estimate > 0.0) pool.push_back(c);
  if (pool.empty())
    fail(ErrorCode::config, "no candidates with positive completeness to summarize");
  std::sort(pool.begin(), pool.end(), candidate_order);
  const std::size_t n = pool.size();

  // Exact union coverage is available when every candidate carries a match
  // bitmask over one common sample.
  std::size_t sample_size = pool.front().sample_size;
  bool masks = sample_size > 0;
  for (const auto& c : pool)
    masks = masks && c.sample_size == sample_size && c.matches.size() == sample_size;
  const std::size_t words = masks ? (sample_size + 63) / 64 : 0;
  std::vector<std::vector<std::uint64_t>> packed;
  if (masks) {
    packed.assign(n, std::vector<std::uint64_t>(words, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < sample_size; ++b)
        if (pool[i].matches[b]) packed[i][b / 64] |= std::uint64_t{1} << (b % 64);
  }

  std::vector<double> suffix_cp(n + 1, 0.0), suffix_info(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    suffix_cp[i] = std::max(suffix_cp[i + 1], pool[i].cp_estimate);
    suffix_info[i] = std::max(suffix_info[i + 1], pool[i].info);
  }

  std::vector<SearchNode> nodes;
  nodes.reserve(std::min(node_budget, std::size_t{4096}));

  // Top two upper bounds across everything ever created, so the witness can
  // exclude the node under test.
  double best_ub = -1.0, second_ub = -1.0;
  std::size_t best_ub_node = SIZE_MAX;
  std::vector<std::uint64_t> scratch(words, 0);
  bool truncated = false;

  auto create = [&](std::vector<std::size_t> members) -> bool {
    if (nodes.size() >= node_budget) {
      truncated = true;
      return false;
    }
    SearchNode node;
    node.members = std::move(members);
    node.complete = node.members.size() == k;
    if (masks) {
      std::fill(scratch.begin(), scratch.end(), 0);
      for (std::size_t i : node.members)
        for (std::size_t w = 0; w < words; ++w) scratch[w] |= packed[i][w];
      std::size_t hits = 0;
      for (std::size_t w = 0; w < words; ++w) hits += std::popcount(scratch[w]);
      node.cp_lb = node.cp_ub =
          static_cast<double>(hits) / static_cast<double>(sample_size);
    } else {
      std::tie(node.cp_lb, node.cp_ub) = structural_cp_bounds(pool, node.members);
    }
    double info_sum = 0.0;
    for (std::size_t i : node.members) info_sum += pool[i].info;
    const std::size_t start = node.members.back() + 1;
    std::tie(node.score_lb, node.score_ub) =
        bound_scores(node.cp_lb, node.cp_ub, info_sum, node.members.size(), k,
                     n - std::min(n, start), suffix_cp[std::min(n, start)],
                     suffix_info[std::min(n, start)]);
    const std::size_t id = nodes.size();
    if (node.score_ub > best_ub) {
      second_ub = best_ub;
      best_ub = node.score_ub;
      best_ub_node = id;
    } else {
      second_ub = std::max(second_ub, node.score_ub);
    }
    nodes.push_back(std::move(node));
    return true;
  };

  auto queue_less = [&](std::size_t a, std::size_t b) {
    if (nodes[a].score_lb != nodes[b].score_lb)
      return nodes[a].score_lb < nodes[b].score_lb;
    return nodes[b].members < nodes[a].members;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(queue_less)>
      open(queue_less);

  for (std::size_t i = 0; i < n && !truncated; ++i) {
    if (create({i})) open.push(nodes.size() - 1);
  }

  while (!open.empty() && !truncated) {
    const std::size_t id = open.top();
    open.pop();
    const double ub_others = id == best_ub_node ? second_ub : best_ub;
    if (nodes[id].complete && nodes[id].score_lb >= ub_others - kBoundEps)
      return assemble(pool, nodes[id], true);
    if (nodes[id].members.size() >= k) continue;
    for (std::size_t j = nodes[id].members.back() + 1; j < n; ++j) {
      std::vector<std::size_t> ext = nodes[id].members;
      ext.push_back(j);
      if (!create(std::move(ext))) break;
      open.push(nodes.size() - 1);
    }
  }

  // Without an early witness: a fully walked space with exact coverage makes
  // the largest lower bound over every node the provable optimum (sets
  // smaller than k stay eligible, mirroring the exhaustive reference).
  // Otherwise rank by midpoint, but only over full-size sets when any exist:
  // an unproven incomplete node's upper bound belongs to an unfinished
  // branch, not to the set itself, so it is no deliverable summary.
  const bool proven = !truncated && masks;
  bool have_complete = false;
  if (!proven)
    for (const SearchNode& node : nodes)
      if (node.complete) {
        have_complete = true;
        break;
      }
  std::size_t best = nodes.size();
  auto rank = [&](std::size_t i) {
    return proven ? nodes[i].score_lb : (nodes[i].score_lb + nodes[i].score_ub) / 2.0;
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (have_complete && !nodes[i].complete) continue;
    if (best == nodes.size() || rank(i) > rank(best) ||
        (rank(i) == rank(best) && nodes[i].members < nodes[best].members))
      best = i;
  }
  return assemble(pool, nodes[best], proven);
}

}  // namespace provsumm
