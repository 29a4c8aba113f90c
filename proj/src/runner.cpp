#include "provsumm/runner.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "provsumm/oracle.hpp"
#include "provsumm/patterns.hpp"
#include "provsumm/relstore.hpp"
#include "provsumm/sampling.hpp"
#include "provsumm/sqlgen.hpp"
#include "provsumm/topk.hpp"

namespace provsumm {

namespace {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::io, "short write to " + path);
}

class Stopwatch {
 public:
  double lap_ms() {
    auto now = clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - mark_).count();
    mark_ = now;
    return ms;
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point mark_ = clock::now();
};

json value_json(const Value& v) {
  if (std::holds_alternative<std::int64_t>(v))
    return std::get<std::int64_t>(v);
  return std::get<std::string>(v);
}

json space_json(const DerivationSpace& space) {
  json out;
  out["decimal"] = space.decimal();
  out["log10"] = space.log10_value();
  out["saturated"] = space.saturated;
  return out;
}

json question_json(const ProvenanceQuestion& q) {
  json out;
  out["text"] = print_question(q);
  out["type"] = q.qtype == QuestionType::why ? "why" : "whynot";
  out["predicate"] = q.ptuple.predicate;
  json args = json::array();
  for (const PTupleArg& a : q.ptuple.args) {
    json arg;
    if (a.is_placeholder)
      arg["placeholder"] = a.placeholder;
    else
      arg["constant"] = value_json(a.constant);
    args.push_back(arg);
  }
  out["args"] = args;
  return out;
}

json pattern_json(const PatternCandidate& c) {
  json out;
  out["rule_id"] = c.pattern.rule_id;
  json args = json::array();
  for (const auto& a : c.pattern.args)
    args.push_back(a ? value_json(*a) : json(nullptr));
  out["args"] = args;
  json goals = json::array();
  for (bool g : c.pattern.goal_annotations) goals.push_back(g);
  out["goal_annotations"] = goals;
  out["cp"] = c.cp_estimate;
  out["match_count"] = c.match_count;
  out["sample_size"] = c.sample_size;
  out["informativeness"] = c.info;
  out["score"] = c.score;
  return out;
}

// Full enumeration dressed up as a sample so candidate generation and scoring
// run unchanged; estimates over it are exact.
SampleSet wrap_enumeration(const FullProvenance& full, const Query& q,
                           const Database& db, const DomainOverrides& ov) {
  SampleSet set;
  set.qtype = full.question.qtype;
  set.target_size = full.derivations.size();
  set.achieved_size = full.derivations.size();
  set.oversample_size_used = 0;
  set.shortfall = false;
  double total = full.total_space.to_double();
  set.p_prov_estimate =
      total > 0.0 ? static_cast<double>(full.derivations.size()) / total : 0.0;

  for (const Rule& rule : q.rules) {
    RuleSample rs;
    rs.rule_id = rule.id;
    UnifiedRule u = unify_with_ptuple(rule, full.question.ptuple);
    if (u.contradiction) {
      rs.space = DerivationSpace::zero();
    } else {
      try {
        rs.space = count_derivation_space(u, all_var_domains(u, db, ov));
      } catch (const EngineError& e) {
        if (e.code() != ErrorCode::empty_domain) throw;
        rs.space = DerivationSpace::zero();
      }
    }
    for (const AnnotatedDerivation& d : full.derivations)
      if (d.rule_id == rule.id) rs.derivations.push_back(d);
    double sp = rs.space.to_double();
    rs.p_prov =
        sp > 0.0 ? static_cast<double>(rs.derivations.size()) / sp : 0.0;
    set.per_rule.push_back(std::move(rs));
  }
  return set;
}

void check_config(const RunConfig& cfg) {
  if (cfg.k < 1) fail(ErrorCode::config, "k must be at least 1");
  if (cfg.sample_size < 1)
    fail(ErrorCode::config, "sample size must be at least 1");
  if (!(cfg.success_prob > 0.0) || !(cfg.success_prob < 1.0))
    fail(ErrorCode::config, "success probability must lie in (0, 1)");
}

}  // namespace

json run_summarize(const RunConfig& cfg) {
  check_config(cfg);
  Stopwatch total;
  Stopwatch phase;

  Database db = load_database(cfg.data_dir, cfg.schema_path);
  Query query = parse_program(read_file(cfg.rules_path));
  ProvenanceQuestion question = parse_question(cfg.question_text);
  DomainOverrides overrides;
  if (!cfg.domains_path.empty())
    overrides = parse_domains(read_file(cfg.domains_path));
  if (cfg.universal_domain) overrides.universal = true;
  validate_query(query, db);
  double load_ms = phase.lap_ms();

  if (!cfg.emit_sql_path.empty())
    write_file(cfg.emit_sql_path, emit_sql(query, db, question));

  json report;
  report["tool"] = "provsumm";
  report["version"] = "0.1.0";
  report["mode"] = cfg.mode == RunMode::sample ? "sample" : "full";
  report["question"] = question_json(question);
  json rules = json::array();
  for (const Rule& r : query.rules)
    rules.push_back(json{{"id", r.id}, {"text", print_rule(r)}});
  report["query"] = json{{"head_predicate", query.head_predicate},
                         {"head_arity", query.head_arity},
                         {"rules", rules}};
  report["config"] = json{
      {"k", cfg.k},
      {"seed", cfg.seed},
      {"sample_size", cfg.sample_size},
      {"success_prob", cfg.success_prob},
      {"universal_domain", cfg.universal_domain},
      {"domains_path",
       cfg.domains_path.empty() ? json(nullptr) : json(cfg.domains_path)}};

  phase.lap_ms();
  SampleSet set;
  DerivationSpace space;
  if (cfg.mode == RunMode::sample) {
    SampleConfig sc;
    sc.target_size = cfg.sample_size;
    sc.success_prob = cfg.success_prob;
    sc.rng_seed = cfg.seed;
    set = sample(query, db, question, sc, overrides);
    space = DerivationSpace::zero();
    for (const RuleSample& rs : set.per_rule) space.add(rs.space);

    json per_rule = json::array();
    for (const RuleSample& rs : set.per_rule)
      per_rule.push_back(json{{"rule_id", rs.rule_id},
                              {"p_prov", rs.p_prov},
                              {"selectivity_multiplier",
                               rs.selectivity_multiplier},
                              {"oversample_size", rs.oversample_size},
                              {"attempts", rs.attempts},
                              {"space", rs.space.decimal()},
                              {"derivations", rs.derivations.size()}});
    report["space"] = space_json(space);
    report["sampling"] = json{{"target_size", set.target_size},
                              {"achieved_size", set.achieved_size},
                              {"oversample_size_used", set.oversample_size_used},
                              {"p_prov_estimate", set.p_prov_estimate},
                              {"shortfall", set.shortfall},
                              {"per_rule", per_rule}};
  } else {
    FullProvenance full =
        question.qtype == QuestionType::whynot
            ? enumerate_whynot(query, db, question.ptuple, overrides)
            : enumerate_why(query, db, question.ptuple, overrides);
    if (full.derivations.empty())
      fail(ErrorCode::empty_provenance,
           question.qtype == QuestionType::whynot
               ? "every candidate derivation already succeeds"
               : "no derivations support this answer");
    set = wrap_enumeration(full, query, db, overrides);
    space = full.total_space;

    json per_rule = json::array();
    for (const RuleSample& rs : set.per_rule)
      per_rule.push_back(json{{"rule_id", rs.rule_id},
                              {"space", rs.space.decimal()},
                              {"derivations", rs.derivations.size()}});
    report["space"] = space_json(space);
    report["enumeration"] = json{{"derivations", set.achieved_size},
                                 {"fraction_of_space", set.p_prov_estimate},
                                 {"per_rule", per_rule}};
  }
  double provenance_ms = phase.lap_ms();

  std::vector<DerivationPattern> raw = generate_candidates(set);
  std::vector<PatternCandidate> candidates = estimate_completeness(raw, set);
  score_candidates(candidates, question.ptuple);
  double candidates_ms = phase.lap_ms();

  SummaryResult result = best_first_topk(candidates, cfg.k);
  double search_ms = phase.lap_ms();

  json patterns = json::array();
  for (const PatternCandidate& c : result.patterns)
    patterns.push_back(pattern_json(c));
  report["patterns"] = patterns;
  report["summary"] = json{{"score_lb", result.score_lb},
                           {"score_ub", result.score_ub},
                           {"exact", result.exact},
                           {"candidates_considered", candidates.size()}};
  report["timings_ms"] = json{{"load", load_ms},
                              {"provenance", provenance_ms},
                              {"candidates", candidates_ms},
                              {"search", search_ms},
                              {"total", total.lap_ms()}};
  return report;
}

std::string render_text(const json& report) {
  std::ostringstream os;
  os << report["question"]["text"].get<std::string>() << "  [mode="
     << report["mode"].get<std::string>() << " k="
     << report["config"]["k"].get<std::size_t>() << " seed="
     << report["config"]["seed"].get<std::uint64_t>() << "]\n";
  for (const auto& r : report["query"]["rules"])
    os << "rule " << r["id"].get<std::string>() << ": "
       << r["text"].get<std::string>() << "\n";
  os << "derivation space: " << report["space"]["decimal"].get<std::string>();
  if (report["space"]["saturated"].get<bool>())
    os << " (approximate, log10 = " << report["space"]["log10"].get<double>()
       << ")";
  os << "\n";

  if (report.contains("sampling")) {
    const auto& s = report["sampling"];
    os << "sample: " << s["achieved_size"] << " of " << s["target_size"]
       << " target, " << s["oversample_size_used"]
       << " raw draws, estimated missing fraction "
       << s["p_prov_estimate"].get<double>();
    if (s["shortfall"].get<bool>()) os << " (short of target)";
    os << "\n";
    for (const auto& r : s["per_rule"])
      os << "  " << r["rule_id"].get<std::string>() << ": p_prov="
         << r["p_prov"].get<double>() << " selectivity="
         << r["selectivity_multiplier"].get<double>() << " draws="
         << r["oversample_size"] << " attempts=" << r["attempts"]
         << " derivations=" << r["derivations"] << "\n";
  } else {
    const auto& e = report["enumeration"];
    os << "enumeration: " << e["derivations"]
       << " derivations, fraction of space "
       << e["fraction_of_space"].get<double>() << "\n";
    for (const auto& r : e["per_rule"])
      os << "  " << r["rule_id"].get<std::string>() << ": space="
         << r["space"].get<std::string>() << " derivations="
         << r["derivations"] << "\n";
  }

  os << "patterns:\n";
  std::size_t n = 0;
  for (const auto& p : report["patterns"]) {
    os << "  " << ++n << ". " << p["rule_id"].get<std::string>() << "(";
    bool first = true;
    for (const auto& a : p["args"]) {
      if (!first) os << ", ";
      first = false;
      if (a.is_null())
        os << "*";
      else if (a.is_string())
        os << "'" << a.get<std::string>() << "'";
      else
        os << a;
    }
    os << ") goals(";
    first = true;
    for (const auto& g : p["goal_annotations"]) {
      if (!first) os << ",";
      first = false;
      os << (g.get<bool>() ? "hit" : "miss");
    }
    os << ") cp=" << p["cp"].get<double>() << " info="
       << p["informativeness"].get<double>() << " score="
       << p["score"].get<double>() << "\n";
  }
  const auto& s = report["summary"];
  os << "summary score: [" << s["score_lb"].get<double>() << ", "
     << s["score_ub"].get<double>() << "]"
     << (s["exact"].get<bool>() ? " (exact)" : " (bounded)") << "\n";
  return os.str();
}

json error_json(const EngineError& err) {
  return json{{"error", json{{"code", error_code_name(err.code())},
                             {"message", err.what()}}}};
}

}  // namespace provsumm
