#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "provsumm/datalog.hpp"
#include "provsumm/errors.hpp"
#include "provsumm/relstore.hpp"
#include "provsumm/sampling.hpp"

using namespace provsumm;

namespace {

const std::string kData = PROVSUMM_TEST_DATA_DIR;
using u128 = unsigned __int128;

Value iv(std::int64_t v) { return Value(v); }
Value sv(const char* v) { return Value(std::string(v)); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Database fig4_db() { return load_database(kData + "/fig4", kData + "/fig4/schema.txt"); }
Query fig4_query() { return parse_program("Qex(X,Y) :- R(X,Z), R(Z,Y), X < Y."); }
DomainOverrides fig4_overrides() { return parse_domains(slurp(kData + "/fig4/domains.txt")); }

Database airbnb_db() {
  return load_database(kData + "/airbnb", kData + "/airbnb/schema.txt");
}
Query airbnb_query() {
  return parse_program("AL(N,R) :- L(I,N,T,R,'queen anne',E), A(I,'2016-11-09',P).");
}

AnnotatedDerivation deriv(const char* rule, Row args, std::vector<bool> flags) {
  AnnotatedDerivation d;
  d.rule_id = rule;
  d.args = std::move(args);
  d.goal_annotations = std::move(flags);
  return d;
}

// Exact rational binomial tail: with p = n/d, decides
//   P[X >= s | N draws] >= Pn/Pd
// through integers only. Sound for d^N * Pd within 128 bits.
bool tail_ok_exact(std::size_t N, std::size_t s, u128 n, u128 d, u128 pn, u128 pd) {
  u128 dN = 1;
  for (std::size_t i = 0; i < N; ++i) dN *= d;
  const u128 m = d - n;
  std::vector<u128> m_pow(N + 1, 1);
  for (std::size_t k = 1; k <= N; ++k) m_pow[k] = m_pow[k - 1] * m;
  u128 low = 0;
  u128 binom = 1;  // C(N, 0)
  u128 n_pow = 1;  // n^0
  for (std::size_t i = 0; i < s && i <= N; ++i) {
    low += binom * n_pow * m_pow[N - i];
    binom = binom * (N - i) / (i + 1);
    n_pow *= n;
  }
  const u128 survival = dN - low;
  return survival * pd >= pn * dN;
}

std::size_t oracle_oversample(u128 pn, u128 pd, std::size_t s, u128 Pn, u128 Pd) {
  for (std::size_t N = s; N <= 200; ++N)
    if (tail_ok_exact(N, s, pn, pd, Pn, Pd)) return N;
  return 0;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const EngineError& e) {
    return e.code();
  }
  FAIL("expected an EngineError");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("oversample size matches an exact rational oracle") {
  CHECK(oracle_oversample(2, 3, 3, 9, 10) == 7);
  CHECK(required_oversample_size(2.0 / 3.0, 3, 0.9, 1'000'000) == 7);
  CHECK(oracle_oversample(2, 3, 3, 85, 100) == 6);
  CHECK(required_oversample_size(2.0 / 3.0, 3, 0.85, 1'000'000) == 6);
  CHECK(required_oversample_size(1.0, 5, 0.999, 1'000'000) == 5);

  const std::pair<u128, u128> probs[] = {{1, 3}, {1, 2}, {2, 3}, {3, 4}, {9, 10}};
  const std::pair<u128, u128> goals[] = {{9, 10}, {99, 100}};
  for (const auto& [pn, pd] : probs) {
    for (std::size_t s = 1; s <= 5; ++s) {
      for (const auto& [gn, gd] : goals) {
        const std::size_t want = oracle_oversample(pn, pd, s, gn, gd);
        REQUIRE(want > 0);
        const double p = static_cast<double>(pn) / static_cast<double>(pd);
        const double g = static_cast<double>(gn) / static_cast<double>(gd);
        CAPTURE(p);
        CAPTURE(s);
        CAPTURE(g);
        CHECK(required_oversample_size(p, s, g, 1'000'000) == want);
      }
    }
  }
}

TEST_CASE("oversample size rejects bad arguments and enforces the cap") {
  CHECK(code_of([] { required_oversample_size(0.0, 3, 0.9, 100); }) ==
        ErrorCode::config);
  CHECK(code_of([] { required_oversample_size(1.5, 3, 0.9, 100); }) ==
        ErrorCode::config);
  CHECK(code_of([] { required_oversample_size(0.5, 0, 0.9, 100); }) ==
        ErrorCode::config);
  CHECK(code_of([] { required_oversample_size(0.5, 3, 1.0, 100); }) ==
        ErrorCode::config);
  CHECK(code_of([] { required_oversample_size(0.5, 3, 0.0, 100); }) ==
        ErrorCode::config);
  CHECK(code_of([] { required_oversample_size(0.5, 2000, 0.9, 1000); }) ==
        ErrorCode::oversample_cap);
  CHECK(code_of([] { required_oversample_size(1e-6, 10, 0.99, 1000); }) ==
        ErrorCode::oversample_cap);
}

TEST_CASE("derivation space multiplies filtered domain sizes") {
  Database db = fig4_db();
  Query q = fig4_query();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");
  UnifiedRule u = unify_with_ptuple(q.rules[0], question.ptuple);
  auto domains = all_var_domains(u, db, fig4_overrides());
  DerivationSpace space = count_derivation_space(u, domains);
  CHECK_FALSE(space.saturated);
  CHECK(space.decimal() == "18");
  CHECK(space.log10_value() == doctest::Approx(std::log10(18.0)));

  // variable-to-variable comparisons do not shrink the counted space
  UnifiedRule open_u =
      unify_with_ptuple(q.rules[0], parse_question("WHYNOT Qex(X, Y)").ptuple);
  auto open_domains = all_var_domains(open_u, db, fig4_overrides());
  CHECK(count_derivation_space(open_u, open_domains).decimal() == "216");

  Database adb = airbnb_db();
  Query aq = airbnb_query();
  ProvenanceQuestion aquestion = parse_question("WHYNOT AL(N, 'shared')");
  UnifiedRule au = unify_with_ptuple(aq.rules[0], aquestion.ptuple);
  auto adomains = all_var_domains(au, adb, {});
  CHECK(count_derivation_space(au, adomains).decimal() == "2160");
}

TEST_CASE("derivation space saturates gracefully past 128 bits") {
  std::vector<Row> rows;
  for (std::int64_t i = 0; i < 100; ++i) rows.push_back({iv(i)});
  Database db = make_database({make_relation("T", {"a"}, {ValueType::integer}, rows)});
  std::string text = "Q(X1) :- T(X1)";
  for (int i = 2; i <= 20; ++i) text += ", T(X" + std::to_string(i) + ")";
  Query q = parse_program(text + ".");
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT Q(A)").ptuple);
  DerivationSpace space = count_derivation_space(u, all_var_domains(u, db, {}));
  CHECK(space.saturated);
  CHECK(space.log10_value() == doctest::Approx(40.0));
  CHECK(space.decimal().find("e+") != std::string::npos);
}

TEST_CASE("missing fraction matches hand counts") {
  Database db = fig4_db();
  Query q = fig4_query();
  DomainOverrides ov = fig4_overrides();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");
  UnifiedRule u = unify_with_ptuple(q.rules[0], question.ptuple);
  auto domains = all_var_domains(u, db, ov);
  std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
  CHECK(count_existing_derivations(u, domains, existing).decimal() == "6");
  CHECK(rule_p_prov(u, domains, existing) == doctest::Approx(2.0 / 3.0));
  CHECK(estimate_p_prov(q, db, question, ov) == doctest::Approx(2.0 / 3.0));

  // nothing shared is derivable, so the whole space is missing
  Database adb = airbnb_db();
  Query aq = airbnb_query();
  ProvenanceQuestion aquestion = parse_question("WHYNOT AL(N, 'shared')");
  CHECK(estimate_p_prov(aq, adb, aquestion, {}) == doctest::Approx(1.0));

  // every derivable head already exists
  Database full = make_database({make_relation(
      "T", {"a", "b"}, {ValueType::integer, ValueType::integer}, {{iv(1), iv(10)}})});
  Query fq = parse_program("Q(X) :- T(X,Y).");
  CHECK(estimate_p_prov(fq, full, parse_question("WHYNOT Q(A)"), {}) ==
        doctest::Approx(0.0));
}

TEST_CASE("selectivity compensation counts variable order predicates") {
  auto unified = [](const std::string& text, const std::string& question) {
    Query q = parse_program(text);
    return unify_with_ptuple(q.rules[0], parse_question(question).ptuple);
  };
  CHECK(selectivity_compensation(
            unified("Q(X,Y) :- R(X,Z), R(Z,Y), X < Y.", "WHYNOT Q(A,B)"), 16.0) ==
        doctest::Approx(2.0));
  CHECK(selectivity_compensation(
            unified("Q(X,Y) :- R(X,Z), R(Z,Y), X != Y.", "WHYNOT Q(A,B)"), 16.0) ==
        doctest::Approx(1.0));
  CHECK(selectivity_compensation(
            unified("Q(X,Z) :- R(X,Y), R(Y,Z), X < Y, Y < Z.", "WHYNOT Q(A,B)"),
            16.0) == doctest::Approx(4.0));
  CHECK(selectivity_compensation(
            unified("Q(X,Z) :- R(X,Y), R(Y,Z), X < Y, Y < Z.", "WHYNOT Q(A,B)"),
            3.0) == doctest::Approx(3.0));
  // bound comparisons no longer discount anything
  CHECK(selectivity_compensation(
            unified("Q(X,Y) :- R(X,Z), R(Z,Y), X < Y.", "WHYNOT Q(A, 4)"), 16.0) ==
        doctest::Approx(1.0));
}

TEST_CASE("per variable draws are deterministic and land in their domains") {
  Database db = fig4_db();
  Query q = fig4_query();
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT Qex(X, 4)").ptuple);
  auto domains = all_var_domains(u, db, fig4_overrides());
  REQUIRE(u.unbound_vars == std::vector<std::string>{"X", "Z"});

  auto a = draw_columns(u, domains, 64, 7, 0, 0);
  auto b = draw_columns(u, domains, 64, 7, 0, 0);
  CHECK(a == b);
  CHECK(a.size() == 2);
  CHECK(a[0].size() == 64);
  auto c = draw_columns(u, domains, 64, 7, 0, 1);
  CHECK(a != c);
  auto d = draw_columns(u, domains, 64, 8, 0, 0);
  CHECK(a != d);
  for (std::size_t vi = 0; vi < a.size(); ++vi) {
    const auto& dom = domains.at(u.unbound_vars[vi]).values;
    for (const Value& v : a[vi])
      CHECK(std::binary_search(dom.begin(), dom.end(), v, value_less));
  }
}

TEST_CASE("zip filter and annotate walk the textbook trace") {
  Database db = fig4_db();
  Query q = fig4_query();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");
  UnifiedRule u = unify_with_ptuple(q.rules[0], question.ptuple);

  std::vector<std::vector<Value>> columns = {{iv(1), iv(2), iv(2)},
                                             {iv(4), iv(2), iv(4)}};
  std::vector<Row> bindings = zip_bindings(u, columns);
  REQUIRE(bindings == std::vector<Row>{{iv(1), iv(4), iv(4)},
                                       {iv(2), iv(4), iv(2)},
                                       {iv(2), iv(4), iv(4)}});

  std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
  CHECK(existing == std::set<Row>{{iv(1), iv(4)}});
  std::vector<Row> missing =
      filter_existing(bindings, u, existing, question.ptuple, QuestionType::whynot);
  REQUIRE(missing == std::vector<Row>{{iv(2), iv(4), iv(2)}, {iv(2), iv(4), iv(4)}});

  auto annotated = annotate_goals(missing, u, db);
  CHECK(annotated ==
        std::vector<AnnotatedDerivation>{
            deriv("r1", {iv(2), iv(4), iv(2)}, {false, true}),
            deriv("r1", {iv(2), iv(4), iv(4)}, {true, false})});

  // same rows twice collapse under set semantics
  missing.push_back(missing.front());
  CHECK(annotate_goals(missing, u, db).size() == 2);

  std::vector<Row> kept =
      filter_existing(bindings, u, existing, question.ptuple, QuestionType::why);
  CHECK(kept == std::vector<Row>{{iv(1), iv(4), iv(4)}});
}

TEST_CASE("zip rejects rows that break comparisons and handles bound rules") {
  Database db = make_database({make_relation(
      "R", {"a", "b"}, {ValueType::integer, ValueType::integer}, {{iv(1), iv(2)}})});
  Query q = parse_program("Q(X,Y) :- R(X,Y), X < 4.");
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT Q(2, 6)").ptuple);
  REQUIRE_FALSE(u.contradiction);
  REQUIRE(u.unbound_vars.empty());
  CHECK(zip_bindings(u, {}) == std::vector<Row>{{iv(2), iv(6)}});

  // the pinned value falsifies the comparison outright
  CHECK(unify_with_ptuple(q.rules[0], parse_question("WHYNOT Q(5, 6)").ptuple)
            .contradiction);

  Query qvv = parse_program("Q(X,Y) :- R(X,Y), X < Y.");
  UnifiedRule uv = unify_with_ptuple(qvv.rules[0], parse_question("WHYNOT Q(A, B)").ptuple);
  std::vector<Row> rows = zip_bindings(uv, {{iv(1), iv(3)}, {iv(2), iv(3)}});
  CHECK(rows == std::vector<Row>{{iv(1), iv(2)}});

  CHECK(code_of([&] { zip_bindings(uv, {{iv(1)}}); }) == ErrorCode::config);
  CHECK(code_of([&] { zip_bindings(uv, {{iv(1)}, {iv(2), iv(3)}}); }) ==
        ErrorCode::config);
}

TEST_CASE("repeated placeholders pin head columns to each other") {
  Database db = make_database({make_relation(
      "R", {"a", "b"}, {ValueType::integer, ValueType::integer},
      {{iv(1), iv(1)}, {iv(1), iv(2)}})});
  Query q = parse_program("Q(X,Y) :- R(X,Y).");
  // only constructible through the API; the question grammar keeps
  // placeholders distinct
  ProvenanceQuestion question;
  question.qtype = QuestionType::why;
  question.ptuple.predicate = "Q";
  PTupleArg c;
  c.is_placeholder = true;
  c.placeholder = "C";
  question.ptuple.args = {c, c};
  std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
  CHECK(existing == std::set<Row>{{iv(1), iv(1)}});

  UnifiedRule u = unify_with_ptuple(q.rules[0], question.ptuple);
  std::vector<Row> vals = {{iv(1), iv(1)}, {iv(1), iv(2)}};
  CHECK(filter_existing(vals, u, existing, question.ptuple, QuestionType::why) ==
        std::vector<Row>{{iv(1), iv(1)}});
  // the diagonal mismatch is not a missing answer either; it fails the question
  CHECK(filter_existing(vals, u, existing, question.ptuple, QuestionType::whynot)
            .empty());
}

TEST_CASE("negated goals annotate true when the tuple is absent") {
  Database db = make_database(
      {make_relation("T", {"a"}, {ValueType::integer}, {{iv(1)}, {iv(2)}}),
       make_relation("U", {"a"}, {ValueType::integer}, {{iv(2)}})});
  Query q = parse_program("S(X) :- T(X), not U(X).");
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT S(A)").ptuple);
  auto annotated = annotate_goals({{iv(1)}, {iv(2)}}, u, db);
  CHECK(annotated == std::vector<AnnotatedDerivation>{
                         deriv("r1", {iv(1)}, {true, true}),
                         deriv("r1", {iv(2)}, {true, false})});
}

TEST_CASE("whynot sampling recovers the sliced space exactly") {
  Database db = fig4_db();
  Query q = fig4_query();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");

  SampleConfig cfg;
  cfg.target_size = 6;
  cfg.success_prob = 0.999;
  cfg.rng_seed = 11;
  SampleSet s = sample(q, db, question, cfg);

  CHECK(s.qtype == QuestionType::whynot);
  REQUIRE(s.per_rule.size() == 1);
  CHECK(s.per_rule[0].p_prov == doctest::Approx(0.5));
  CHECK(s.p_prov_estimate == doctest::Approx(0.5));
  CHECK(s.per_rule[0].space.decimal() == "12");
  CHECK(s.achieved_size == 6);
  CHECK_FALSE(s.shortfall);

  const std::vector<AnnotatedDerivation> slice = {
      deriv("r1", {iv(2), iv(4), iv(1)}, {false, false}),
      deriv("r1", {iv(2), iv(4), iv(2)}, {false, true}),
      deriv("r1", {iv(2), iv(4), iv(3)}, {true, false}),
      deriv("r1", {iv(2), iv(4), iv(4)}, {true, false}),
      deriv("r1", {iv(2), iv(4), iv(5)}, {false, false}),
      deriv("r1", {iv(2), iv(4), iv(6)}, {false, false})};
  CHECK(s.per_rule[0].derivations == slice);

  // asking for more than exists keeps everything and flags the shortfall
  cfg.target_size = 20;
  SampleSet wide = sample(q, db, question, cfg);
  CHECK(wide.per_rule[0].derivations == slice);
  CHECK(wide.achieved_size == 6);
  CHECK(wide.shortfall);

  // a strict subset otherwise, drawn from the slice
  cfg.target_size = 3;
  SampleSet small = sample(q, db, question, cfg);
  CHECK(small.achieved_size == 3);
  for (const auto& d : small.per_rule[0].derivations)
    CHECK(std::find(slice.begin(), slice.end(), d) != slice.end());
}

TEST_CASE("why sampling enumerates successful derivations") {
  Database db = fig4_db();
  Query q = fig4_query();

  SampleConfig cfg;
  cfg.target_size = 10;
  cfg.rng_seed = 5;
  SampleSet s = sample(q, db, parse_question("WHY Qex(X, 4)"), cfg);
  REQUIRE(s.per_rule.size() == 1);
  CHECK(s.per_rule[0].derivations ==
        std::vector<AnnotatedDerivation>{
            deriv("r1", {iv(1), iv(4), iv(2)}, {true, true})});
  CHECK(s.achieved_size == 1);
  CHECK(s.shortfall);
  CHECK(s.p_prov_estimate == doctest::Approx(1.0));

  const std::vector<AnnotatedDerivation> full = {
      deriv("r1", {iv(1), iv(3), iv(2)}, {true, true}),
      deriv("r1", {iv(1), iv(4), iv(2)}, {true, true}),
      deriv("r1", {iv(5), iv(6), iv(5)}, {true, true})};
  cfg.target_size = 10;
  SampleSet all = sample(q, db, parse_question("WHY Qex(X, Y)"), cfg);
  CHECK(all.per_rule[0].derivations == full);
  CHECK(all.achieved_size == 3);

  cfg.target_size = 2;
  SampleSet two = sample(q, db, parse_question("WHY Qex(X, Y)"), cfg);
  CHECK(two.achieved_size == 2);
  CHECK_FALSE(two.shortfall);
  for (const auto& d : two.flattened())
    CHECK(std::find(full.begin(), full.end(), d) != full.end());

  CHECK(code_of([&] {
          SampleConfig c;
          sample(q, db, parse_question("WHY Qex(X, 1)"), c);
        }) == ErrorCode::empty_provenance);
}

TEST_CASE("sampling is a pure function of inputs and seed") {
  Database db = fig4_db();
  Query q = fig4_query();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");
  SampleConfig cfg;
  cfg.target_size = 3;
  cfg.rng_seed = 42;
  SampleSet a = sample(q, db, question, cfg);
  SampleSet b = sample(q, db, question, cfg);
  CHECK(a.flattened() == b.flattened());
  CHECK(a.achieved_size == b.achieved_size);
  CHECK(a.oversample_size_used == b.oversample_size_used);
  CHECK(a.p_prov_estimate == b.p_prov_estimate);

  cfg.rng_seed = 43;
  SampleSet c = sample(q, db, question, cfg);
  CHECK(a.flattened() != c.flattened());
}

TEST_CASE("multi rule pipelines size and sample each rule separately") {
  Database db = make_database(
      {make_relation("T", {"a", "b"}, {ValueType::integer, ValueType::integer},
                     {{iv(1), iv(10)}, {iv(2), iv(20)}}),
       make_relation("U", {"a", "b"}, {ValueType::integer, ValueType::integer},
                     {{iv(3), iv(30)}})});
  Query q = parse_program(
      "Q(X) :- T(X,Y), Y > 15.\n"
      "Q(X) :- U(X,Y).");
  ProvenanceQuestion question = parse_question("WHYNOT Q(A)");

  CHECK(estimate_p_prov(q, db, question, {}) == doctest::Approx(1.0 / 3.0));

  SampleConfig cfg;
  cfg.target_size = 1;
  cfg.rng_seed = 3;
  SampleSet s = sample(q, db, question, cfg);
  REQUIRE(s.per_rule.size() == 2);
  CHECK(s.per_rule[0].rule_id == "r1");
  CHECK(s.per_rule[0].p_prov == doctest::Approx(0.5));
  CHECK(s.per_rule[0].derivations ==
        std::vector<AnnotatedDerivation>{deriv("r1", {iv(1), iv(20)}, {false})});
  CHECK(s.per_rule[1].rule_id == "r2");
  CHECK(s.per_rule[1].p_prov == doctest::Approx(0.0));
  CHECK(s.per_rule[1].derivations.empty());
  CHECK(s.per_rule[1].oversample_size == 0);
  CHECK(s.achieved_size == 1);
  CHECK(s.p_prov_estimate == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(s.shortfall);
}

TEST_CASE("questions with nothing missing or nothing present fail cleanly") {
  Database db = make_database({make_relation(
      "T", {"a", "b"}, {ValueType::integer, ValueType::integer}, {{iv(1), iv(10)}})});
  Query q = parse_program("Q(X) :- T(X,Y).");
  CHECK(code_of([&] {
          SampleConfig cfg;
          sample(q, db, parse_question("WHYNOT Q(A)"), cfg);
        }) == ErrorCode::empty_provenance);

  // a question contradicting every rule has no provenance either
  Query qc = parse_program("Q(X,Y) :- T(X,Y), X < 1.");
  CHECK(code_of([&] {
          SampleConfig cfg;
          sample(qc, db, parse_question("WHYNOT Q(1, 10)"), cfg);
        }) == ErrorCode::empty_provenance);
}

TEST_CASE("sample configs are validated") {
  Database db = fig4_db();
  Query q = fig4_query();
  ProvenanceQuestion question = parse_question("WHYNOT Qex(X, 4)");
  SampleConfig cfg;
  cfg.target_size = 0;
  CHECK(code_of([&] { sample(q, db, question, cfg); }) == ErrorCode::config);
  cfg.target_size = 3;
  cfg.success_prob = 1.0;
  CHECK(code_of([&] { sample(q, db, question, cfg); }) == ErrorCode::config);
}

TEST_CASE("sampled derivations satisfy the space invariants") {
  std::mt19937_64 gen(2024);
  Query q = parse_program("Q(X,Y) :- R(X,Z), S(Z,Y), X != Y, X < 3.");
  int productive = 0;
  for (int trial = 0; trial < 12; ++trial) {
    auto random_rows = [&](std::size_t count) {
      std::vector<Row> rows;
      for (std::size_t i = 0; i < count; ++i)
        rows.push_back({iv(static_cast<std::int64_t>(gen() % 6)),
                        iv(static_cast<std::int64_t>(gen() % 6))});
      return rows;
    };
    Database db = make_database(
        {make_relation("R", {"a", "b"}, {ValueType::integer, ValueType::integer},
                       random_rows(8)),
         make_relation("S", {"a", "b"}, {ValueType::integer, ValueType::integer},
                       random_rows(8))});
    ProvenanceQuestion question = parse_question("WHYNOT Q(A, B)");
    SampleConfig cfg;
    cfg.target_size = 20;
    cfg.rng_seed = 100 + static_cast<std::uint64_t>(trial);

    SampleSet s;
    try {
      s = sample(q, db, question, cfg);
    } catch (const EngineError& e) {
      CHECK(e.code() == ErrorCode::empty_provenance);
      continue;
    }
    ++productive;

    UnifiedRule u = unify_with_ptuple(q.rules[0], question.ptuple);
    auto domains = all_var_domains(u, db, {});
    std::set<Row> existing = existing_matching_answers(q, db, question.ptuple);
    REQUIRE(s.per_rule.size() == 1);
    const auto& derivs = s.per_rule[0].derivations;
    CHECK(std::is_sorted(derivs.begin(), derivs.end(), derivation_less));
    CHECK(std::adjacent_find(derivs.begin(), derivs.end()) == derivs.end());
    for (const auto& d : derivs) {
      REQUIRE(d.args.size() == q.rules[0].variable_order.size());
      std::map<std::string, Value> valuation;
      for (std::size_t i = 0; i < d.args.size(); ++i)
        valuation[q.rules[0].variable_order[i]] = d.args[i];
      for (const auto& var : u.unbound_vars) {
        const auto& dom = domains.at(var).values;
        CHECK(std::binary_search(dom.begin(), dom.end(), valuation.at(var),
                                 value_less));
      }
      CHECK_FALSE(existing.count(instantiate_head(u, d.args)));
      std::size_t flag = 0;
      for (const Goal& g : u.body) {
        if (g.kind == Goal::Kind::comparison) {
          CHECK(goal_holds(db, g, valuation));
        } else {
          CHECK(d.goal_annotations.at(flag++) == goal_holds(db, g, valuation));
        }
      }
    }
  }
  CHECK(productive >= 8);
}
