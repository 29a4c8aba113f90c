#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "provsumm/datalog.hpp"
#include "provsumm/errors.hpp"
#include "provsumm/relstore.hpp"

using namespace provsumm;

namespace {

const std::string kData = PROVSUMM_TEST_DATA_DIR;

Value iv(std::int64_t v) { return Value(v); }
Value sv(const char* v) { return Value(std::string(v)); }

Database fig4_db() { return load_database(kData + "/fig4", kData + "/fig4/schema.txt"); }
Database airbnb_db() {
  return load_database(kData + "/airbnb", kData + "/airbnb/schema.txt");
}

Query fig4_query() {
  return parse_program("Qex(X,Y) :- R(X,Z), R(Z,Y), X < Y.");
}

Query airbnb_query() {
  return parse_program(
      "AL(N,R) :- L(I,N,T,R,'queen anne',E), A(I,'2016-11-09',P).");
}

std::set<Row> row_set(const Relation& rel) {
  return std::set<Row>(rel.rows.begin(), rel.rows.end());
}

}  // namespace

TEST_CASE("csv loading respects declared types and sorts rows") {
  Database db = fig4_db();
  const Relation& r = db.relation("R");
  CHECK(r.arity() == 2);
  CHECK(r.rows.size() == 6);
  CHECK(r.contains({iv(2), iv(4)}));
  CHECK_FALSE(r.contains({iv(4), iv(2)}));
  CHECK(r.column_domains[0] == std::vector<Value>{iv(1), iv(2), iv(5)});
  CHECK(r.column_domains[1] ==
        std::vector<Value>{iv(2), iv(3), iv(4), iv(5), iv(6)});
}

TEST_CASE("loading errors carry machine-readable codes") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const EngineError& e) {
      return e.code();
    }
    return ErrorCode::parse;
  };
  CHECK(code_of([] { load_database(kData + "/fig4", kData + "/fig4/nope.txt"); }) ==
        ErrorCode::io);
  CHECK(code_of([] {
          load_database_from_text("R(a:int)", {{"R", "a\nx\n"}});
        }) == ErrorCode::data);
  CHECK(code_of([] {
          load_database_from_text("R(a:int)", {{"R", "b\n1\n"}});
        }) == ErrorCode::data);
  CHECK(code_of([] { load_database_from_text("R(a:int", {}); }) ==
        ErrorCode::schema);
  CHECK(code_of([] {
          load_database_from_text("R(a:int)\nR(b:int)", {{"R", "a\n"}});
        }) == ErrorCode::schema);
}

TEST_CASE("quoted csv fields keep commas and quotes") {
  Database db = load_database_from_text(
      "T(a:string, b:int)", {{"T", "a,b\n\"x, y\",3\n\"he said \"\"hi\"\"\",4\n"}});
  CHECK(db.relation("T").contains({sv("x, y"), iv(3)}));
  CHECK(db.relation("T").contains({sv("he said \"hi\""), iv(4)}));
}

TEST_CASE("distinct value counts match the listings snapshot") {
  Database db = airbnb_db();
  CHECK(db.attribute_domain("id").size() == 6);
  CHECK(db.attribute_domain("name").size() == 6);
  CHECK(db.attribute_domain("ptype").size() == 3);
  CHECK(db.attribute_domain("rtype").size() == 3);
  CHECK(db.attribute_domain("ngroup").size() == 3);
  CHECK(db.attribute_domain("neighbor").size() == 5);
  CHECK(db.attribute_domain("date").size() == 2);
  CHECK(db.attribute_domain("price").size() == 4);
}

TEST_CASE("evaluate: two-hop ordered pairs") {
  Relation out = evaluate(fig4_query(), fig4_db());
  CHECK(row_set(out) == std::set<Row>{{iv(1), iv(3)}, {iv(1), iv(4)}, {iv(5), iv(6)}});
}

TEST_CASE("evaluate: answered listings") {
  Relation out = evaluate(airbnb_query(), airbnb_db());
  CHECK(row_set(out) == std::set<Row>{{sv("cozy homebase"), sv("private")},
                                      {sv("modern view"), sv("entire")}});
}

TEST_CASE("evaluate handles negation and empty results") {
  Database db = load_database_from_text(
      "E(a:int, b:int)", {{"E", "a,b\n1,2\n2,1\n1,3\n"}});
  Query q = parse_program("Q(X,Y) :- E(X,Y), not E(Y,X).");
  CHECK(row_set(evaluate(q, db)) == std::set<Row>{{iv(1), iv(3)}});

  Query none = parse_program("Q(X,Y) :- E(X,Y), X > 10.");
  CHECK(evaluate(none, db).rows.empty());
}

TEST_CASE("evaluate unions rules with set semantics") {
  Database db = load_database_from_text(
      "E(a:int, b:int)", {{"E", "a,b\n1,2\n2,3\n"}});
  Query q = parse_program("Q(X) :- E(X,Y).\nQ(X) :- E(Y,X).");
  CHECK(row_set(evaluate(q, db)) == std::set<Row>{{iv(1)}, {iv(2)}, {iv(3)}});
}

TEST_CASE("monotonicity under tuple insertion for negation-free queries") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Row> rows;
    auto rnd = [&](int m) { return static_cast<std::int64_t>(rng() % m); };
    int n = 2 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) rows.push_back({iv(rnd(4)), iv(rnd(4))});
    Query q = parse_program("Q(X,Y) :- E(X,Z), E(Z,Y).");
    Database db = make_database({make_relation(
        "E", {"a", "b"}, {ValueType::integer, ValueType::integer}, rows)});
    auto before = row_set(evaluate(q, db));
    rows.push_back({iv(rnd(4)), iv(rnd(4))});
    Database db2 = make_database({make_relation(
        "E", {"a", "b"}, {ValueType::integer, ValueType::integer}, rows)});
    auto after = row_set(evaluate(q, db2));
    for (const auto& t : before) CHECK(after.count(t) == 1);
  }
}

TEST_CASE("validation rejects arity, type, and unknown-relation mistakes") {
  Database db = fig4_db();
  auto code_of = [&](const char* text) {
    try {
      validate_query(parse_program(text), db);
    } catch (const EngineError& e) {
      return e.code();
    }
    return ErrorCode::parse;
  };
  CHECK(code_of("Q(X) :- R(X,Y,Z).") == ErrorCode::schema);
  CHECK(code_of("Q(X) :- S(X).") == ErrorCode::schema);
  CHECK(code_of("Q(X) :- R(X,'two').") == ErrorCode::schema);
  CHECK(code_of("Q(X) :- R(X,Y), X < 'nine'.") == ErrorCode::schema);
  validate_query(fig4_query(), db);  // must not throw
}

TEST_CASE("goal_holds checks membership, absence, and comparisons") {
  Database db = fig4_db();
  Query q = parse_program("Q(X,Y) :- R(X,Y), not R(Y,X), X < Y.");
  const auto& body = q.rules[0].body;
  std::map<std::string, Value> nu{{"X", iv(2)}, {"Y", iv(3)}};
  CHECK(goal_holds(db, body[0], nu));
  CHECK(goal_holds(db, body[1], nu));  // (3,2) absent
  CHECK(goal_holds(db, body[2], nu));
  nu["Y"] = iv(1);
  CHECK_FALSE(goal_holds(db, body[0], nu));
  CHECK_FALSE(goal_holds(db, body[2], nu));
  CHECK_THROWS_AS(goal_holds(db, body[0], {{"X", iv(1)}}), EngineError);
}

TEST_CASE("default variable domains union the occupied attribute positions") {
  Query q = fig4_query();
  PTuple pt = parse_question("WHYNOT Qex(X,4)").ptuple;
  UnifiedRule u = unify_with_ptuple(q.rules[0], pt);
  Database db = fig4_db();

  // Z sits in R.b (first literal) and R.a (second): union is {1..6}.
  VarDomain z = var_domain(u, "Z", db, {});
  CHECK(z.values == std::vector<Value>{iv(1), iv(2), iv(3), iv(4), iv(5), iv(6)});
  CHECK_FALSE(z.user_supplied);

  // X only occupies R.a, then X < 4 narrows it.
  VarDomain x = var_domain(u, "X", db, {});
  CHECK(x.values == std::vector<Value>{iv(1), iv(2)});
}

TEST_CASE("attribute overrides and the universal domain rebuild the example") {
  Query q = fig4_query();
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT Qex(X,4)").ptuple);
  Database db = fig4_db();

  DomainOverrides file = parse_domains(
      "% widen both columns\n"
      "attr R.a = {1,2,3,4,5,6}\n"
      "attr R.b = {1,2,3,4,5,6}\n");
  VarDomain x = var_domain(u, "X", db, file);
  CHECK(x.values == std::vector<Value>{iv(1), iv(2), iv(3)});
  CHECK(x.user_supplied);

  DomainOverrides uni;
  uni.universal = true;
  CHECK(var_domain(u, "X", db, uni).values ==
        std::vector<Value>{iv(1), iv(2), iv(3)});
  CHECK(var_domain(u, "Z", db, uni).values.size() == 6);
}

TEST_CASE("variable overrides replace the union before filtering") {
  Query q = fig4_query();
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHYNOT Qex(X,4)").ptuple);
  Database db = fig4_db();

  DomainOverrides o = parse_domains("var r1.X = {1, 2, 3, 9}\n");
  VarDomain x = var_domain(u, "X", db, o);
  CHECK(x.values == std::vector<Value>{iv(1), iv(2), iv(3)});  // 9 fails X < 4
  CHECK(x.user_supplied);

  DomainOverrides bad = parse_domains("var r1.X = {5, 6}\n");
  CHECK_THROWS_AS(var_domain(u, "X", db, bad), EngineError);

  DomainOverrides mistyped = parse_domains("var r1.X = {'one'}\n");
  CHECK_THROWS_AS(var_domain(u, "X", db, mistyped), EngineError);
}

TEST_CASE("listing variables draw from both join sides") {
  Query q = airbnb_query();
  UnifiedRule u =
      unify_with_ptuple(q.rules[0], parse_question("WHYNOT AL(N,'shared')").ptuple);
  Database db = airbnb_db();
  auto domains = all_var_domains(u, db, {});
  CHECK(domains.at("N").values.size() == 6);
  CHECK(domains.at("I").values.size() == 6);  // L.id has 6, A.id has 4 of them
  CHECK(domains.at("T").values.size() == 3);
  CHECK(domains.at("E").values.size() == 5);
  CHECK(domains.at("P").values.size() == 4);
  CHECK(domains.count("R") == 0);  // bound by the question
}

TEST_CASE("existing answers restricted by the question tuple") {
  auto existing = existing_matching_answers(
      fig4_query(), fig4_db(), parse_question("WHYNOT Qex(X,4)").ptuple);
  CHECK(existing == std::set<Row>{{iv(1), iv(4)}});

  auto shared = existing_matching_answers(
      airbnb_query(), airbnb_db(), parse_question("WHYNOT AL(N,'shared')").ptuple);
  CHECK(shared.empty());
}

TEST_CASE("for_each_satisfying honors preset bindings") {
  Query q = fig4_query();
  UnifiedRule u = unify_with_ptuple(q.rules[0], parse_question("WHY Qex(X,4)").ptuple);
  Database db = fig4_db();
  std::vector<Row> hits;
  for_each_satisfying(u.base, u.body, db, u.bindings,
                      [&](const Row& v) { hits.push_back(v); });
  // Only X=1, Y=4, Z=2 satisfies R(X,Z), R(Z,4), X<4.
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == Row{iv(1), iv(4), iv(2)});
}
