#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "provsumm/datalog.hpp"

namespace provsumm {

using Row = std::vector<Value>;

bool row_less(const Row& a, const Row& b);

struct Relation {
  std::string name;
  std::vector<std::string> column_names;
  std::vector<ValueType> column_types;
  std::vector<Row> rows;                        // sorted, duplicate-free
  std::vector<std::vector<Value>> column_domains;  // sorted distinct values per column

  std::size_t arity() const { return column_names.size(); }
  bool contains(const Row& row) const;
  std::size_t column_index(const std::string& column) const;  // throws E_SCHEMA
};

struct Database {
  std::map<std::string, Relation> relations;

  bool has(const std::string& name) const { return relations.count(name) > 0; }
  const Relation& relation(const std::string& name) const;

  // Distinct values of every same-typed column in the database.
  std::vector<Value> universal_domain(ValueType t) const;
  // Distinct values across all columns sharing this name, any relation.
  std::vector<Value> attribute_domain(const std::string& column_name) const;
};

struct ColumnDecl {
  std::string name;
  ValueType type;
};

struct RelationDecl {
  std::string name;
  std::vector<ColumnDecl> columns;
};

std::vector<RelationDecl> parse_schema(const std::string& text);

// Normalizes rows (sort, dedup), derives column domains, checks types.
Relation make_relation(std::string name, std::vector<std::string> column_names,
                       std::vector<ValueType> column_types, std::vector<Row> rows);
Database make_database(std::vector<Relation> relations);

// Reads <data_dir>/<relation>.csv for every declared relation.
Database load_database(const std::string& data_dir, const std::string& schema_path);
Database load_database_from_text(
    const std::string& schema_text,
    const std::map<std::string, std::string>& csv_by_relation);

// Relations referenced by the query must exist with matching arity; variable
// positions must agree on a column type, and comparisons must be same-typed.
void validate_query(const Query& q, const Database& db);

ValueType variable_type(const Rule& r, const std::string& var, const Database& db);

struct DomainOverrides {
  // keyed (relation, column) and (rule id, variable)
  std::map<std::pair<std::string, std::string>, std::vector<Value>> attributes;
  std::map<std::pair<std::string, std::string>, std::vector<Value>> variables;
  bool universal = false;

  bool empty() const {
    return attributes.empty() && variables.empty() && !universal;
  }
};

DomainOverrides parse_domains(const std::string& text);

struct VarDomain {
  std::string variable;
  std::vector<Value> values;  // sorted, distinct
  bool user_supplied = false;
};

// Union of active domains over the attribute positions the variable occupies in
// positive literals, then filtered by the unified rule's constant-vs-variable
// comparisons. Overrides replace the union before filtering. Empty is an error.
VarDomain var_domain(const UnifiedRule& u, const std::string& var,
                     const Database& db, const DomainOverrides& overrides);

std::map<std::string, VarDomain> all_var_domains(const UnifiedRule& u,
                                                 const Database& db,
                                                 const DomainOverrides& overrides);

bool goal_holds(const Database& db, const Goal& g,
                const std::map<std::string, Value>& valuation);

Relation evaluate(const Query& q, const Database& db);

// Walks every valuation of the rule's variables satisfying body (positive
// literals joined in body order, negation and comparisons applied as soon as
// their variables are bound). preset pins variables substituted out of body.
// Emits valuations aligned with base.variable_order.
void for_each_satisfying(const Rule& base, const std::vector<Goal>& body,
                         const Database& db,
                         const std::map<std::string, Value>& preset,
                         const std::function<void(const Row&)>& emit);

// Existing answers of q that match the p-tuple, via per-rule unification.
std::set<Row> existing_matching_answers(const Query& q, const Database& db,
                                        const PTuple& pt);

}  // namespace provsumm
