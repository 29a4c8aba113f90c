#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace provsumm {

// Constants are typed; an integer never equals a string, even if they print alike.
using Value = std::variant<std::int64_t, std::string>;

enum class ValueType { integer, text };

ValueType type_of(const Value& v);
const char* type_name(ValueType t);

// Total order across types (integers before text), used wherever determinism
// requires sorted iteration.
bool value_less(const Value& a, const Value& b);

std::string to_display(const Value& v);  // quotes text: 'queen anne'
std::string to_plain(const Value& v);    // bare text: queen anne

enum class Comparator { lt, le, ne, ge, gt };

const char* comparator_symbol(Comparator c);

// Throws on mixed-type operands; validation rejects those before evaluation.
bool compare_values(const Value& a, Comparator c, const Value& b);

struct Term {
  bool is_variable = false;
  std::string name;  // set when is_variable
  Value constant;    // set otherwise

  static Term var(std::string n);
  static Term lit(Value v);

  bool operator==(const Term&) const = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  bool operator==(const Atom&) const = default;
};

struct Goal {
  enum class Kind { positive, negated, comparison };

  Kind kind = Kind::positive;
  Atom atom;  // literal goals
  Term lhs;   // comparison goals
  Term rhs;
  Comparator cmp = Comparator::lt;

  bool is_literal() const { return kind != Kind::comparison; }

  bool operator==(const Goal&) const = default;
};

struct Rule {
  std::string id;
  Atom head;
  std::vector<Goal> body;
  // Every variable of the rule, in order of first occurrence (head first).
  // Derivations and patterns align their args with this order.
  std::vector<std::string> variable_order;

  std::size_t literal_goal_count() const;
  std::optional<std::size_t> variable_index(const std::string& name) const;

  bool operator==(const Rule&) const = default;
};

// A union of conjunctive queries: one or more rules sharing head predicate and
// arity, bodies over EDB relations only.
struct Query {
  std::vector<Rule> rules;
  std::string head_predicate;
  std::size_t head_arity = 0;

  bool operator==(const Query&) const = default;
};

struct PTupleArg {
  bool is_placeholder = false;
  std::string placeholder;
  Value constant;

  bool operator==(const PTupleArg&) const = default;
};

// Tuple with placeholders; names are unique within one p-tuple.
struct PTuple {
  std::string predicate;
  std::vector<PTupleArg> args;

  std::size_t constant_count() const;

  bool operator==(const PTuple&) const = default;
};

enum class QuestionType { why, whynot };

struct ProvenanceQuestion {
  PTuple ptuple;
  QuestionType qtype = QuestionType::whynot;
};

// A rule with head variables at the p-tuple's constant positions fixed.
// body/head carry the substituted goals; base stays untouched so derivations
// keep full-arity alignment with base.variable_order.
struct UnifiedRule {
  Rule base;
  Atom head;
  std::vector<Goal> body;
  std::map<std::string, Value> bindings;
  std::vector<std::string> unbound_vars;  // first-occurrence order
  // Set when a head constant contradicts the p-tuple; the rule then derives
  // no matching tuple at all.
  bool contradiction = false;

  bool is_bound(const std::string& var) const { return bindings.count(var) > 0; }
};

Query parse_program(const std::string& text);
std::string print_rule(const Rule& r);
std::string print_program(const Query& q);

ProvenanceQuestion parse_question(const std::string& text);
std::string print_ptuple(const PTuple& pt);
std::string print_question(const ProvenanceQuestion& q);

UnifiedRule unify_with_ptuple(const Rule& r, const PTuple& pt);

// Positional match; a placeholder repeated inside pt must take one constant.
bool matches_ptuple(const std::vector<Value>& tuple, const PTuple& pt);

}  // namespace provsumm
