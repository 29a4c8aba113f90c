#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "provsumm/datalog.hpp"
#include "provsumm/errors.hpp"

using namespace provsumm;

namespace {

const char* kChainRule = "Qex(X,Y) :- R(X,Z), R(Z,Y), X < Y.";

const char* kListingRule =
    "AL(N,R) :- L(I,N,T,R,'queen anne',E), A(I,'2016-11-09',P).";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const EngineError& e) {
    return e.code();
  }
  FAIL("expected an EngineError");
  return ErrorCode::parse;
}

}  // namespace

TEST_CASE("variable order follows first occurrence, head first") {
  Query q = parse_program(kChainRule);
  REQUIRE(q.rules.size() == 1);
  const Rule& r = q.rules[0];
  CHECK(r.id == "r1");
  CHECK(r.variable_order == std::vector<std::string>{"X", "Y", "Z"});
  CHECK(r.literal_goal_count() == 2);
  CHECK(q.head_predicate == "Qex");
  CHECK(q.head_arity == 2);

  Query listing = parse_program(kListingRule);
  CHECK(listing.rules[0].variable_order ==
        std::vector<std::string>{"N", "R", "I", "T", "E", "P"});
}

TEST_CASE("string constants keep their quoting rules") {
  Query q = parse_program(kListingRule);
  const Goal& g = q.rules[0].body[0];
  REQUIRE(g.kind == Goal::Kind::positive);
  CHECK(g.atom.args[4] == Term::lit(Value(std::string("queen anne"))));
  CHECK_THROWS_AS(parse_program("Q(X) :- R(X, queen)."), EngineError);
}

TEST_CASE("negation and all five comparators round-trip through print") {
  std::string text =
      "Q(X) :- R(X,Y), not S(Y), X < 3, X <= Y, Y != 4, X >= 1, Y > 0.\n";
  Query q = parse_program(text);
  CHECK(print_program(q) == text);
  CHECK(parse_program(print_program(q)) == q);
}

TEST_CASE("parse(print(q)) is the identity on assorted programs") {
  const char* programs[] = {
      kChainRule,
      kListingRule,
      "Q(X,Y) :- R(X,Y).\nQ(X,Y) :- S(X,Z), T(Z,Y), Z != 2.",
      "P(X) :- E(X,Y), not E(Y,X), X > -5.",
  };
  for (const char* p : programs) {
    Query q = parse_program(p);
    CHECK(parse_program(print_program(q)) == q);
  }
}

TEST_CASE("safety violations name the offending variables") {
  try {
    parse_program("Q(X) :- not R(X,Y).");
    FAIL("unsafe rule accepted");
  } catch (const EngineError& e) {
    CHECK(e.code() == ErrorCode::safety);
    CHECK(std::string(e.what()).find("Y") != std::string::npos);
  }
  CHECK(code_of([] { parse_program("Q(X) :- R(X), X < Z."); }) ==
        ErrorCode::safety);
}

TEST_CASE("structural validation errors") {
  CHECK(code_of([] { parse_program(""); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_program("Q(X) :- R(X). P(X) :- R(X)."); }) ==
        ErrorCode::parse);
  CHECK(code_of([] { parse_program("Q(X) :- R(X), R(X,X)."); }) ==
        ErrorCode::parse);
  CHECK(code_of([] { parse_program("Q(X) :- Q(X)."); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_program("Q(X) :- R(X), 1 < 'a'."); }) ==
        ErrorCode::parse);
  CHECK(code_of([] { parse_program("Q(X) :- 1 < 2."); }) == ErrorCode::safety);
  CHECK(code_of([] { parse_program("Q(1) :- 1 < 2."); }) == ErrorCode::parse);
}

TEST_CASE("comments and whitespace are ignored") {
  Query q = parse_program(
      "% answered listings\n"
      "AL(N,R) :-\n"
      "  L(I,N,T,R,'queen anne',E),  % geo filter\n"
      "  A(I,'2016-11-09',P).\n");
  CHECK(q == parse_program(kListingRule));
}

TEST_CASE("questions parse placeholders and constants") {
  ProvenanceQuestion q = parse_question("WHYNOT Qex(X,4)");
  CHECK(q.qtype == QuestionType::whynot);
  CHECK(q.ptuple.predicate == "Qex");
  REQUIRE(q.ptuple.args.size() == 2);
  CHECK(q.ptuple.args[0].is_placeholder);
  CHECK(q.ptuple.args[0].placeholder == "X");
  CHECK(q.ptuple.args[1].constant == Value(std::int64_t{4}));
  CHECK(q.ptuple.constant_count() == 1);
  CHECK(print_question(q) == "WHYNOT Qex(X,4)");

  ProvenanceQuestion why = parse_question("why AL(N,'shared')");
  CHECK(why.qtype == QuestionType::why);
  CHECK(why.ptuple.args[1].constant == Value(std::string("shared")));

  CHECK(code_of([] { parse_question("HOW Q(X)"); }) == ErrorCode::question);
  CHECK(code_of([] { parse_question("WHY Q(X,X)"); }) == ErrorCode::question);
  CHECK(code_of([] { parse_question("WHY Q(X) extra"); }) == ErrorCode::question);
}

TEST_CASE("unification binds exactly the constant head positions") {
  Query q = parse_program(kChainRule);
  PTuple pt = parse_question("WHYNOT Qex(X,4)").ptuple;
  UnifiedRule u = unify_with_ptuple(q.rules[0], pt);

  CHECK_FALSE(u.contradiction);
  CHECK(u.bindings == std::map<std::string, Value>{{"Y", Value(std::int64_t{4})}});
  CHECK(u.unbound_vars == std::vector<std::string>{"X", "Z"});
  // Bound variables are substituted in literals and comparisons alike.
  CHECK(u.body[1].atom.args[1] == Term::lit(Value(std::int64_t{4})));
  CHECK(u.body[2].rhs == Term::lit(Value(std::int64_t{4})));
  CHECK(u.body[2].lhs == Term::var("X"));
  // The original rule rides along untouched.
  CHECK(u.base == q.rules[0]);
}

TEST_CASE("unification with a fully constant p-tuple leaves body-only variables") {
  Query q = parse_program(kChainRule);
  PTuple pt = parse_question("WHYNOT Qex(1,2)").ptuple;
  UnifiedRule u = unify_with_ptuple(q.rules[0], pt);
  CHECK(u.unbound_vars == std::vector<std::string>{"Z"});
  CHECK(u.bindings.size() == 2);
}

TEST_CASE("unification detects contradictions instead of failing") {
  Query q = parse_program("Q(X,X) :- R(X).");
  PTuple pt = parse_question("WHYNOT Q(1,2)").ptuple;
  CHECK(unify_with_ptuple(q.rules[0], pt).contradiction);
  PTuple ok = parse_question("WHYNOT Q(3,3)").ptuple;
  CHECK_FALSE(unify_with_ptuple(q.rules[0], ok).contradiction);

  Query head_const = parse_program("Q(X,5) :- R(X).");
  CHECK(unify_with_ptuple(head_const.rules[0],
                          parse_question("WHYNOT Q(1,4)").ptuple)
            .contradiction);
  CHECK_FALSE(unify_with_ptuple(head_const.rules[0],
                                parse_question("WHYNOT Q(1,5)").ptuple)
                  .contradiction);

  CHECK(code_of([&] {
          unify_with_ptuple(q.rules[0], parse_question("WHYNOT Q(1)").ptuple);
        }) == ErrorCode::question);
}

TEST_CASE("p-tuple matching is positional with consistent placeholders") {
  PTuple pt = parse_question("WHYNOT Qex(X,4)").ptuple;
  CHECK(matches_ptuple({Value(std::int64_t{1}), Value(std::int64_t{4})}, pt));
  CHECK_FALSE(matches_ptuple({Value(std::int64_t{1}), Value(std::int64_t{3})}, pt));
  // Typed equality: string '4' is not integer 4.
  CHECK_FALSE(matches_ptuple({Value(std::int64_t{1}), Value(std::string("4"))}, pt));

  PTuple repeated;
  repeated.predicate = "Q";
  PTupleArg a;
  a.is_placeholder = true;
  a.placeholder = "X";
  repeated.args = {a, a};
  CHECK(matches_ptuple({Value(std::int64_t{7}), Value(std::int64_t{7})}, repeated));
  CHECK_FALSE(matches_ptuple({Value(std::int64_t{7}), Value(std::int64_t{8})}, repeated));

  CHECK(code_of([&] { matches_ptuple({Value(std::int64_t{7})}, repeated); }) ==
        ErrorCode::question);
}

TEST_CASE("typed values order integers before text") {
  CHECK(value_less(Value(std::int64_t{9}), Value(std::string("1"))));
  CHECK_FALSE(value_less(Value(std::string("1")), Value(std::int64_t{9})));
  CHECK(value_less(Value(std::int64_t{-2}), Value(std::int64_t{3})));
  CHECK(value_less(Value(std::string("adams")), Value(std::string("ballard"))));
  CHECK(compare_values(Value(std::string("a")), Comparator::lt, Value(std::string("b"))));
  CHECK(code_of([] {
          compare_values(Value(std::int64_t{1}), Comparator::lt, Value(std::string("b")));
        }) == ErrorCode::schema);
}
