#include "provsumm/sqlgen.hpp"

#include <map>
#include <sstream>
#include <vector>

#include "provsumm/errors.hpp"

namespace provsumm {

namespace {

const char* sql_comparator(Comparator c) {
  switch (c) {
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::ne: return "<>";
    case Comparator::ge: return ">=";
    case Comparator::gt: return ">";
  }
  return "<";
}

std::string sql_literal(const Value& v) {
  // to_display already single-quotes text and doubles embedded quotes.
  return to_display(v);
}

// Positions a variable occupies among the positive literals of a body.
struct Occurrence {
  std::size_t goal_index = 0;
  std::string relation;
  std::string column;
};

std::map<std::string, std::vector<Occurrence>> positive_occurrences(
    const std::vector<Goal>& body, const Database& db) {
  std::map<std::string, std::vector<Occurrence>> out;
  for (std::size_t gi = 0; gi < body.size(); ++gi) {
    const Goal& g = body[gi];
    if (g.kind != Goal::Kind::positive) continue;
    const Relation& rel = db.relation(g.atom.predicate);
    for (std::size_t ci = 0; ci < g.atom.args.size(); ++ci) {
      const Term& t = g.atom.args[ci];
      if (t.is_variable)
        out[t.name].push_back({gi, rel.name, rel.column_names[ci]});
    }
  }
  return out;
}

// SELECT ... with one alias per positive literal; shared variables and
// constants become WHERE conditions, negated literals NOT EXISTS subqueries.
// Used for the existing-answers view, which evaluates the original rules.
void render_rule_select(std::ostream& os, const Rule& rule, const Database& db) {
  std::vector<std::string> aliases(rule.body.size());
  std::map<std::string, std::string> var_expr;  // first bound position
  std::vector<std::string> conditions;

  for (std::size_t gi = 0; gi < rule.body.size(); ++gi) {
    const Goal& g = rule.body[gi];
    if (g.kind != Goal::Kind::positive) continue;
    aliases[gi] = "g" + std::to_string(gi + 1);
    const Relation& rel = db.relation(g.atom.predicate);
    for (std::size_t ci = 0; ci < g.atom.args.size(); ++ci) {
      const Term& t = g.atom.args[ci];
      std::string col = aliases[gi] + "." + rel.column_names[ci];
      if (!t.is_variable) {
        conditions.push_back(col + " = " + sql_literal(t.constant));
      } else if (auto it = var_expr.find(t.name); it != var_expr.end()) {
        conditions.push_back(col + " = " + it->second);
      } else {
        var_expr[t.name] = col;
      }
    }
  }

  auto term_expr = [&](const Term& t) {
    return t.is_variable ? var_expr.at(t.name) : sql_literal(t.constant);
  };

  for (const Goal& g : rule.body) {
    if (g.kind == Goal::Kind::comparison)
      conditions.push_back(term_expr(g.lhs) + " " + sql_comparator(g.cmp) +
                           " " + term_expr(g.rhs));
  }

  os << "  SELECT ";
  for (std::size_t k = 0; k < rule.head.args.size(); ++k) {
    if (k > 0) os << ", ";
    os << term_expr(rule.head.args[k]) << " AS c" << (k + 1);
  }
  os << "\n  FROM ";
  bool first = true;
  for (std::size_t gi = 0; gi < rule.body.size(); ++gi) {
    if (aliases[gi].empty()) continue;
    if (!first) os << ", ";
    os << rule.body[gi].atom.predicate << " AS " << aliases[gi];
    first = false;
  }

  for (std::size_t gi = 0; gi < rule.body.size(); ++gi) {
    const Goal& g = rule.body[gi];
    if (g.kind != Goal::Kind::negated) continue;
    const Relation& rel = db.relation(g.atom.predicate);
    std::ostringstream sub;
    sub << "NOT EXISTS (SELECT 1 FROM " << rel.name << " AS n"
        << (gi + 1) << " WHERE ";
    for (std::size_t ci = 0; ci < g.atom.args.size(); ++ci) {
      if (ci > 0) sub << " AND ";
      sub << "n" << (gi + 1) << "." << rel.column_names[ci] << " = "
          << term_expr(g.atom.args[ci]);
    }
    sub << ")";
    conditions.push_back(sub.str());
  }

  if (!conditions.empty()) {
    os << "\n  WHERE ";
    for (std::size_t i = 0; i < conditions.size(); ++i) {
      if (i > 0) os << "\n    AND ";
      os << conditions[i];
    }
  }
}

void render_existing_answers(std::ostream& os, const Query& q,
                             const Database& db) {
  os << "-- existing answers of the query; every rule's pipeline anti-joins"
        " against this\n";
  os << "CREATE VIEW q_result AS\n";
  for (std::size_t i = 0; i < q.rules.size(); ++i) {
    if (i > 0) os << "\n  UNION\n";
    render_rule_select(os, q.rules[i], db);
  }
  os << ";\n";
}

void render_pipeline(std::ostream& os, const std::string& id,
                     const UnifiedRule& u, const Database& db) {
  Rule bound;
  bound.head = u.head;
  bound.body = u.body;
  os << "\n-- rule " << id << " after binding the question's constants:\n";
  os << "-- " << print_rule(bound) << "\n";

  if (u.contradiction) {
    os << "-- head constant conflicts with the question; no pipeline.\n";
    return;
  }
  if (u.unbound_vars.empty()) {
    os << "-- no free variables; nothing to sample.\n";
    return;
  }

  auto occ = positive_occurrences(u.body, db);

  auto var_col = [&](const std::string& name) { return "var_" + name; };
  auto term_in_bind = [&](const Term& t) {
    return t.is_variable ? var_col(t.name) + "." + t.name
                         : sql_literal(t.constant);
  };

  // 1. Candidate bindings: one shuffled, row-numbered draw per variable,
  // zipped on the shared row number. Comparison goals filter the zip.
  os << "CREATE VIEW q_bind_" << id << " AS\nWITH\n";
  for (std::size_t vi = 0; vi < u.unbound_vars.size(); ++vi) {
    const std::string& v = u.unbound_vars[vi];
    os << "  " << var_col(v) << " AS (\n"
       << "    SELECT v AS " << v
       << ", ROW_NUMBER() OVER (ORDER BY random()) AS rn\n"
       << "    FROM ";
    auto it = occ.find(v);
    if (it == occ.end() || it->second.empty()) {
      // Variable bound only through comparisons; fall back to every column
      // of every relation the rule touches is overkill, so sample the first
      // positive literal's relation instead. Validation rejects such rules,
      // this branch is defensive.
      os << "(SELECT NULL AS v WHERE 1 = 0) AS dom_" << v;
    } else if (it->second.size() == 1) {
      os << "(SELECT DISTINCT " << it->second[0].column << " AS v FROM "
         << it->second[0].relation << ") AS dom_" << v;
    } else {
      os << "(";
      for (std::size_t oi = 0; oi < it->second.size(); ++oi) {
        if (oi > 0) os << "\n          UNION ";
        os << "SELECT " << it->second[oi].column << " AS v FROM "
           << it->second[oi].relation;
      }
      os << ") AS dom_" << v;
    }
    os << "\n    LIMIT :oversample_size\n  )";
    os << (vi + 1 < u.unbound_vars.size() ? ",\n" : "\n");
  }
  os << "SELECT ";
  for (std::size_t vi = 0; vi < u.unbound_vars.size(); ++vi) {
    if (vi > 0) os << ", ";
    const std::string& v = u.unbound_vars[vi];
    os << var_col(v) << "." << v;
  }
  os << "\nFROM " << var_col(u.unbound_vars[0]);
  for (std::size_t vi = 1; vi < u.unbound_vars.size(); ++vi)
    os << "\nJOIN " << var_col(u.unbound_vars[vi]) << " ON "
       << var_col(u.unbound_vars[vi]) << ".rn = "
       << var_col(u.unbound_vars[0]) << ".rn";
  bool have_where = false;
  for (const Goal& g : u.body) {
    if (g.kind != Goal::Kind::comparison) continue;
    os << (have_where ? "\n  AND " : "\nWHERE ");
    have_where = true;
    os << term_in_bind(g.lhs) << " " << sql_comparator(g.cmp) << " "
       << term_in_bind(g.rhs);
  }
  os << ";\n";

  // 2. Keep bindings whose instantiated head is absent from the answers.
  os << "\nCREATE VIEW q_der_" << id << " AS\n"
     << "SELECT DISTINCT b.*\nFROM q_bind_" << id << " AS b\n"
     << "WHERE NOT EXISTS (\n  SELECT 1 FROM q_result AS q\n  WHERE ";
  for (std::size_t k = 0; k < u.head.args.size(); ++k) {
    if (k > 0) os << "\n    AND ";
    const Term& t = u.head.args[k];
    os << "q.c" << (k + 1) << " = "
       << (t.is_variable ? "b." + t.name : sql_literal(t.constant));
  }
  os << "\n);\n";

  // 3. One truth flag per literal goal; negated goals invert the outer-join
  // test. Truncated to the target sample size.
  os << "\nCREATE VIEW q_sample_" << id << " AS\nSELECT ";
  for (const std::string& v : u.unbound_vars) os << "d." << v << ", ";
  std::size_t flag = 0;
  std::vector<std::string> joins;
  for (std::size_t gi = 0; gi < u.body.size(); ++gi) {
    const Goal& g = u.body[gi];
    if (!g.is_literal()) continue;
    ++flag;
    const Relation& rel = db.relation(g.atom.predicate);
    std::string alias = "g" + std::to_string(flag);
    if (flag > 1) os << ",\n       ";
    os << "CASE WHEN " << alias << "." << rel.column_names[0]
       << (g.kind == Goal::Kind::negated ? " IS NULL" : " IS NOT NULL")
       << " THEN 1 ELSE 0 END AS goal" << flag;
    std::ostringstream j;
    j << "LEFT OUTER JOIN " << rel.name << " AS " << alias << " ON ";
    for (std::size_t ci = 0; ci < g.atom.args.size(); ++ci) {
      if (ci > 0) j << " AND ";
      const Term& t = g.atom.args[ci];
      j << alias << "." << rel.column_names[ci] << " = "
        << (t.is_variable ? "d." + t.name : sql_literal(t.constant));
    }
    joins.push_back(j.str());
  }
  os << "\nFROM q_der_" << id << " AS d";
  for (const std::string& j : joins) os << "\n" << j;
  os << "\nORDER BY random()\nLIMIT :sample_size;\n";

  // 4. Pairwise least common abstractions within one flag class: agreeing
  // columns keep their value, disagreeing ones become NULL placeholders.
  // Self-pairs keep every sampled row itself as a candidate.
  os << "\nCREATE VIEW q_lca_" << id << " AS\nSELECT DISTINCT\n";
  for (const std::string& v : u.unbound_vars)
    os << "  CASE WHEN a." << v << " = b." << v << " THEN a." << v
       << " ELSE NULL END AS " << v << ",\n";
  os << "  ";
  for (std::size_t f = 1; f <= flag; ++f)
    os << (f > 1 ? ", " : "") << "a.goal" << f;
  os << "\nFROM q_sample_" << id << " AS a\nJOIN q_sample_" << id
     << " AS b\n  ON ";
  for (std::size_t f = 1; f <= flag; ++f) {
    if (f > 1) os << " AND ";
    os << "a.goal" << f << " = b.goal" << f;
  }
  os << ";\n";

  // 5. Match counts; completeness is matches / :sample_size.
  os << "\nCREATE VIEW q_match_" << id << " AS\nSELECT ";
  for (const std::string& v : u.unbound_vars) os << "p." << v << ", ";
  for (std::size_t f = 1; f <= flag; ++f) os << "p.goal" << f << ", ";
  os << "COUNT(*) AS matches\nFROM q_lca_" << id << " AS p\nJOIN q_sample_"
     << id << " AS s\n  ON ";
  bool first_cond = true;
  for (const std::string& v : u.unbound_vars) {
    if (!first_cond) os << "\n AND ";
    first_cond = false;
    os << "(p." << v << " IS NULL OR p." << v << " = s." << v << ")";
  }
  for (std::size_t f = 1; f <= flag; ++f)
    os << "\n AND p.goal" << f << " = s.goal" << f;
  os << "\nGROUP BY ";
  for (const std::string& v : u.unbound_vars) os << "p." << v << ", ";
  for (std::size_t f = 1; f <= flag; ++f)
    os << (f > 1 ? ", " : "") << "p.goal" << f;
  os << ";\n";
}

}  // namespace

std::string emit_sql(const Query& query, const Database& db,
                     const ProvenanceQuestion& question) {
  if (question.qtype != QuestionType::whynot)
    fail(ErrorCode::config, "SQL emission covers WHYNOT questions only");

  std::ostringstream os;
  os << "-- sampling pipeline for " << print_question(question) << "\n";
  os << "-- parameters: :oversample_size (per-variable draws),"
        " :sample_size (kept rows)\n";
  os << "-- generated for documentation; the native engine does not execute"
        " SQL\n\n";

  render_existing_answers(os, query, db);

  for (const Rule& rule : query.rules) {
    UnifiedRule u = unify_with_ptuple(rule, question.ptuple);
    render_pipeline(os, rule.id, u, db);
  }
  return os.str();
}

}  // namespace provsumm
