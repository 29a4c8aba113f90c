#include "provsumm/relstore.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "provsumm/errors.hpp"

namespace provsumm {

bool row_less(const Row& a, const Row& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      value_less);
}

bool Relation::contains(const Row& row) const {
  return std::binary_search(rows.begin(), rows.end(), row, row_less);
}

std::size_t Relation::column_index(const std::string& column) const {
  for (std::size_t i = 0; i < column_names.size(); ++i)
    if (column_names[i] == column) return i;
  fail(ErrorCode::schema, "relation " + name + " has no column " + column);
}

const Relation& Database::relation(const std::string& name) const {
  auto it = relations.find(name);
  if (it == relations.end()) fail(ErrorCode::schema, "unknown relation " + name);
  return it->second;
}

namespace {

std::vector<Value> sorted_unique(std::vector<Value> values) {
  std::sort(values.begin(), values.end(), value_less);
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

std::vector<Value> Database::universal_domain(ValueType t) const {
  std::vector<Value> out;
  for (const auto& [name, rel] : relations)
    for (std::size_t c = 0; c < rel.arity(); ++c)
      if (rel.column_types[c] == t)
        out.insert(out.end(), rel.column_domains[c].begin(),
                   rel.column_domains[c].end());
  return sorted_unique(std::move(out));
}

std::vector<Value> Database::attribute_domain(const std::string& column_name) const {
  std::vector<Value> out;
  bool found = false;
  for (const auto& [name, rel] : relations)
    for (std::size_t c = 0; c < rel.arity(); ++c)
      if (rel.column_names[c] == column_name) {
        found = true;
        out.insert(out.end(), rel.column_domains[c].begin(),
                   rel.column_domains[c].end());
      }
  if (!found) fail(ErrorCode::schema, "no relation has a column named " + column_name);
  return sorted_unique(std::move(out));
}

Relation make_relation(std::string name, std::vector<std::string> column_names,
                       std::vector<ValueType> column_types, std::vector<Row> rows) {
  if (column_names.size() != column_types.size())
    fail(ErrorCode::schema, "relation " + name + ": column name/type count mismatch");
  Relation rel;
  rel.name = std::move(name);
  rel.column_names = std::move(column_names);
  rel.column_types = std::move(column_types);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rel.arity())
      fail(ErrorCode::data, "relation " + rel.name + ", row " + std::to_string(i + 1) +
                                ": expected " + std::to_string(rel.arity()) +
                                " values, got " + std::to_string(rows[i].size()));
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      if (type_of(rows[i][c]) != rel.column_types[c])
        fail(ErrorCode::data, "relation " + rel.name + ", row " + std::to_string(i + 1) +
                                  ", column " + rel.column_names[c] + ": expected " +
                                  type_name(rel.column_types[c]));
  }
  std::sort(rows.begin(), rows.end(), row_less);
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  rel.rows = std::move(rows);
  rel.column_domains.resize(rel.arity());
  for (std::size_t c = 0; c < rel.arity(); ++c) {
    std::vector<Value> column;
    column.reserve(rel.rows.size());
    for (const auto& row : rel.rows) column.push_back(row[c]);
    rel.column_domains[c] = sorted_unique(std::move(column));
  }
  return rel;
}

Database make_database(std::vector<Relation> relations) {
  Database db;
  for (auto& rel : relations) {
    std::string name = rel.name;
    if (!db.relations.emplace(name, std::move(rel)).second)
      fail(ErrorCode::schema, "duplicate relation " + name);
  }
  return db;
}

// ---- schema and csv ----

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

ValueType parse_type(const std::string& s, const std::string& where) {
  if (s == "int") return ValueType::integer;
  if (s == "string") return ValueType::text;
  fail(ErrorCode::schema, where + ": unknown type '" + s + "' (use int or string)");
}

bool parse_int_strict(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (std::size_t j = i; j < s.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(s[j]))) return false;
  try {
    out = std::stoll(s);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno,
                                        const std::string& file) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      cur += c;
    }
  }
  if (quoted)
    fail(ErrorCode::data, file + ":" + std::to_string(lineno) + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Relation load_relation_csv(const RelationDecl& decl, const std::string& csv,
                           const std::string& file) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::data, file + ": missing header row");
  auto header = split_csv_line(line, 1, file);
  if (header.size() != decl.columns.size())
    fail(ErrorCode::data, file + ": header has " + std::to_string(header.size()) +
                              " columns, schema declares " +
                              std::to_string(decl.columns.size()));
  for (std::size_t c = 0; c < header.size(); ++c)
    if (strip(header[c]) != decl.columns[c].name)
      fail(ErrorCode::data, file + ": header column '" + strip(header[c]) +
                                "' does not match schema column '" +
                                decl.columns[c].name + "'");
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    auto fields = split_csv_line(line, lineno, file);
    if (fields.size() != decl.columns.size())
      fail(ErrorCode::data, file + ":" + std::to_string(lineno) + ": expected " +
                                std::to_string(decl.columns.size()) + " fields, got " +
                                std::to_string(fields.size()));
    Row row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (decl.columns[c].type == ValueType::integer) {
        std::int64_t v;
        if (!parse_int_strict(strip(fields[c]), v))
          fail(ErrorCode::data, file + ":" + std::to_string(lineno) + ": column " +
                                    decl.columns[c].name + ": '" + fields[c] +
                                    "' is not an integer");
        row.emplace_back(v);
      } else {
        row.emplace_back(fields[c]);
      }
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> names;
  std::vector<ValueType> types;
  for (const auto& c : decl.columns) {
    names.push_back(c.name);
    types.push_back(c.type);
  }
  return make_relation(decl.name, std::move(names), std::move(types), std::move(rows));
}

}  // namespace

std::vector<RelationDecl> parse_schema(const std::string& text) {
  std::vector<RelationDecl> decls;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = strip(line);
    if (s.empty() || s[0] == '%' || s[0] == '#') continue;
    std::string where = "schema line " + std::to_string(lineno);
    std::size_t open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
      fail(ErrorCode::schema, where + ": expected relation(col:type, ...)");
    RelationDecl decl;
    decl.name = strip(s.substr(0, open));
    if (decl.name.empty()) fail(ErrorCode::schema, where + ": missing relation name");
    std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::istringstream cols(inner);
    std::string col;
    while (std::getline(cols, col, ',')) {
      std::size_t colon = col.find(':');
      if (colon == std::string::npos)
        fail(ErrorCode::schema, where + ": column '" + strip(col) + "' needs a :type");
      ColumnDecl c;
      c.name = strip(col.substr(0, colon));
      c.type = parse_type(strip(col.substr(colon + 1)), where);
      if (c.name.empty()) fail(ErrorCode::schema, where + ": empty column name");
      for (const auto& prev : decl.columns)
        if (prev.name == c.name)
          fail(ErrorCode::schema, where + ": duplicate column " + c.name);
      decl.columns.push_back(std::move(c));
    }
    if (decl.columns.empty())
      fail(ErrorCode::schema, where + ": relation " + decl.name + " has no columns");
    for (const auto& prev : decls)
      if (prev.name == decl.name)
        fail(ErrorCode::schema, where + ": duplicate relation " + decl.name);
    decls.push_back(std::move(decl));
  }
  if (decls.empty()) fail(ErrorCode::schema, "schema declares no relations");
  return decls;
}

Database load_database_from_text(
    const std::string& schema_text,
    const std::map<std::string, std::string>& csv_by_relation) {
  auto decls = parse_schema(schema_text);
  std::vector<Relation> rels;
  for (const auto& decl : decls) {
    auto it = csv_by_relation.find(decl.name);
    if (it == csv_by_relation.end())
      fail(ErrorCode::data, "no data provided for relation " + decl.name);
    rels.push_back(load_relation_csv(decl, it->second, decl.name + ".csv"));
  }
  return make_database(std::move(rels));
}

Database load_database(const std::string& data_dir, const std::string& schema_path) {
  auto decls = parse_schema(read_file(schema_path));
  std::vector<Relation> rels;
  for (const auto& decl : decls) {
    std::string path = data_dir + "/" + decl.name + ".csv";
    rels.push_back(load_relation_csv(decl, read_file(path), path));
  }
  return make_database(std::move(rels));
}

// ---- validation ----

namespace {

// Column type at every position the variable occupies in literal goals.
std::vector<ValueType> occupied_types(const Rule& r, const std::string& var,
                                      const Database& db, bool positive_only) {
  std::vector<ValueType> types;
  for (const auto& g : r.body) {
    if (!g.is_literal()) continue;
    if (positive_only && g.kind != Goal::Kind::positive) continue;
    const Relation& rel = db.relation(g.atom.predicate);
    for (std::size_t i = 0; i < g.atom.args.size(); ++i)
      if (g.atom.args[i].is_variable && g.atom.args[i].name == var)
        types.push_back(rel.column_types[i]);
  }
  return types;
}

ValueType term_type(const Rule& r, const Term& t, const Database& db) {
  if (!t.is_variable) return type_of(t.constant);
  auto types = occupied_types(r, t.name, db, /*positive_only=*/true);
  if (types.empty())
    fail(ErrorCode::schema, "rule " + r.id + ": variable " + t.name +
                                " has no positive literal position");
  return types.front();
}

}  // namespace

ValueType variable_type(const Rule& r, const std::string& var, const Database& db) {
  return term_type(r, Term::var(var), db);
}

void validate_query(const Query& q, const Database& db) {
  for (const auto& r : q.rules) {
    for (const auto& g : r.body) {
      if (!g.is_literal()) continue;
      if (!db.has(g.atom.predicate))
        fail(ErrorCode::schema, "rule " + r.id + " references unknown relation " +
                                    g.atom.predicate);
      const Relation& rel = db.relation(g.atom.predicate);
      if (rel.arity() != g.atom.args.size())
        fail(ErrorCode::schema, "rule " + r.id + ": relation " + g.atom.predicate +
                                    " has arity " + std::to_string(rel.arity()) +
                                    ", used with " +
                                    std::to_string(g.atom.args.size()));
      for (std::size_t i = 0; i < g.atom.args.size(); ++i)
        if (!g.atom.args[i].is_variable &&
            type_of(g.atom.args[i].constant) != rel.column_types[i])
          fail(ErrorCode::schema, "rule " + r.id + ": constant " +
                                      to_display(g.atom.args[i].constant) +
                                      " does not fit " + g.atom.predicate + "." +
                                      rel.column_names[i] + " (" +
                                      type_name(rel.column_types[i]) + ")");
    }
    for (const auto& v : r.variable_order) {
      auto types = occupied_types(r, v, db, /*positive_only=*/false);
      for (std::size_t i = 1; i < types.size(); ++i)
        if (types[i] != types[0])
          fail(ErrorCode::schema, "rule " + r.id + ": variable " + v +
                                      " occupies both int and string columns");
    }
    for (const auto& g : r.body) {
      if (g.is_literal()) continue;
      ValueType lt = term_type(r, g.lhs, db);
      ValueType rt = term_type(r, g.rhs, db);
      if (lt != rt)
        fail(ErrorCode::schema, "rule " + r.id + ": comparison " +
                                    (g.lhs.is_variable ? g.lhs.name
                                                       : to_display(g.lhs.constant)) +
                                    " " + comparator_symbol(g.cmp) + " " +
                                    (g.rhs.is_variable ? g.rhs.name
                                                       : to_display(g.rhs.constant)) +
                                    " mixes int and string");
    }
  }
}

// ---- domains ----

DomainOverrides parse_domains(const std::string& text) {
  DomainOverrides o;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = strip(line);
    if (s.empty() || s[0] == '%' || s[0] == '#') continue;
    std::string where = "domains line " + std::to_string(lineno);
    std::istringstream ls(s);
    std::string kind, key, eq;
    if (!(ls >> kind >> key >> eq) || eq != "=" ||
        (kind != "attr" && kind != "var"))
      fail(ErrorCode::config, where + ": expected 'attr rel.col = {..}' or 'var rule.Var = {..}'");
    std::size_t dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
      fail(ErrorCode::config, where + ": key '" + key + "' needs the form a.b");
    std::string rest;
    std::getline(ls, rest);
    rest = strip(rest);
    if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
      fail(ErrorCode::config, where + ": values must be wrapped in {...}");
    std::string inner = rest.substr(1, rest.size() - 2);
    std::vector<Value> values;
    std::string item;
    std::istringstream items(inner);
    while (std::getline(items, item, ',')) {
      std::string v = strip(item);
      if (v.empty()) fail(ErrorCode::config, where + ": empty value");
      std::int64_t n;
      if (v.front() == '\'') {
        if (v.size() < 2 || v.back() != '\'')
          fail(ErrorCode::config, where + ": unterminated string " + v);
        values.emplace_back(v.substr(1, v.size() - 2));
      } else if (parse_int_strict(v, n)) {
        values.emplace_back(n);
      } else {
        values.emplace_back(v);  // bare word as string
      }
    }
    if (values.empty()) fail(ErrorCode::config, where + ": empty domain");
    auto k = std::make_pair(key.substr(0, dot), key.substr(dot + 1));
    auto& target = kind == "attr" ? o.attributes : o.variables;
    if (!target.emplace(k, sorted_unique(std::move(values))).second)
      fail(ErrorCode::config, where + ": duplicate override for " + key);
  }
  return o;
}

namespace {

void check_override_types(const std::vector<Value>& values, ValueType expected,
                          const std::string& what) {
  for (const auto& v : values)
    if (type_of(v) != expected)
      fail(ErrorCode::config, what + ": override value " + to_display(v) +
                                  " is not " + type_name(expected));
}

}  // namespace

VarDomain var_domain(const UnifiedRule& u, const std::string& var,
                     const Database& db, const DomainOverrides& overrides) {
  VarDomain out;
  out.variable = var;

  auto vit = overrides.variables.find({u.base.id, var});
  if (vit != overrides.variables.end()) {
    check_override_types(vit->second, variable_type(u.base, var, db),
                         "var " + u.base.id + "." + var);
    out.values = vit->second;
    out.user_supplied = true;
  } else {
    std::vector<Value> pool;
    bool occupies = false;
    for (const auto& g : u.body) {
      if (g.kind != Goal::Kind::positive) continue;
      const Relation& rel = db.relation(g.atom.predicate);
      for (std::size_t i = 0; i < g.atom.args.size(); ++i) {
        if (!g.atom.args[i].is_variable || g.atom.args[i].name != var) continue;
        occupies = true;
        auto ait = overrides.attributes.find({rel.name, rel.column_names[i]});
        if (ait != overrides.attributes.end()) {
          check_override_types(ait->second, rel.column_types[i],
                               "attr " + rel.name + "." + rel.column_names[i]);
          out.user_supplied = true;
          pool.insert(pool.end(), ait->second.begin(), ait->second.end());
        } else if (overrides.universal) {
          auto uni = db.universal_domain(rel.column_types[i]);
          pool.insert(pool.end(), uni.begin(), uni.end());
        } else {
          pool.insert(pool.end(), rel.column_domains[i].begin(),
                      rel.column_domains[i].end());
        }
      }
    }
    if (!occupies)
      fail(ErrorCode::empty_domain, "rule " + u.base.id + ": variable " + var +
                                        " occupies no positive literal position");
    out.values = sorted_unique(std::move(pool));
  }

  // constant-vs-variable comparisons narrow the domain; variable-variable
  // predicates are compensated at sampling time instead
  for (const auto& g : u.body) {
    if (g.is_literal()) continue;
    bool lhs_is_var = g.lhs.is_variable && g.lhs.name == var;
    bool rhs_is_var = g.rhs.is_variable && g.rhs.name == var;
    if (lhs_is_var && !g.rhs.is_variable) {
      std::erase_if(out.values,
                    [&](const Value& v) { return !compare_values(v, g.cmp, g.rhs.constant); });
    } else if (rhs_is_var && !g.lhs.is_variable) {
      std::erase_if(out.values,
                    [&](const Value& v) { return !compare_values(g.lhs.constant, g.cmp, v); });
    }
  }

  if (out.values.empty())
    fail(ErrorCode::empty_domain,
         "rule " + u.base.id + ": domain of variable " + var + " is empty");
  return out;
}

std::map<std::string, VarDomain> all_var_domains(const UnifiedRule& u,
                                                 const Database& db,
                                                 const DomainOverrides& overrides) {
  std::map<std::string, VarDomain> out;
  for (const auto& v : u.unbound_vars) out.emplace(v, var_domain(u, v, db, overrides));
  return out;
}

// ---- evaluation ----

bool goal_holds(const Database& db, const Goal& g,
                const std::map<std::string, Value>& valuation) {
  auto resolve = [&](const Term& t) -> const Value& {
    if (!t.is_variable) return t.constant;
    auto it = valuation.find(t.name);
    if (it == valuation.end())
      fail(ErrorCode::config, "valuation does not bind variable " + t.name);
    return it->second;
  };
  if (g.kind == Goal::Kind::comparison)
    return compare_values(resolve(g.lhs), g.cmp, resolve(g.rhs));
  Row row;
  row.reserve(g.atom.args.size());
  for (const auto& t : g.atom.args) row.push_back(resolve(t));
  bool present = db.relation(g.atom.predicate).contains(row);
  return g.kind == Goal::Kind::positive ? present : !present;
}

namespace {

struct ColumnAction {
  enum class Kind { constant, check, bind } kind;
  Value constant;       // Kind::constant
  std::size_t var = 0;  // variable slot otherwise
};

struct LevelPlan {
  const Relation* rel = nullptr;
  std::vector<ColumnAction> actions;
  std::vector<const Goal*> filters;  // ready once this level binds
};

}  // namespace

void for_each_satisfying(const Rule& base, const std::vector<Goal>& body,
                         const Database& db,
                         const std::map<std::string, Value>& preset,
                         const std::function<void(const Row&)>& emit) {
  const std::size_t n = base.variable_order.size();
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) slot[base.variable_order[i]] = i;

  std::vector<Value> vals(n, Value(std::int64_t{0}));
  std::vector<bool> bound(n, false);
  for (const auto& [name, v] : preset) {
    auto it = slot.find(name);
    if (it == slot.end())
      fail(ErrorCode::config, "preset binds unknown variable " + name);
    vals[it->second] = v;
    bound[it->second] = true;
  }

  // Static plan: which level binds each variable, where each filter fits.
  std::vector<LevelPlan> levels;
  std::vector<bool> planned = bound;
  auto goal_ready = [&](const Goal& g, const std::vector<bool>& have) {
    auto term_ready = [&](const Term& t) { return !t.is_variable || have[slot.at(t.name)]; };
    if (g.kind == Goal::Kind::comparison) return term_ready(g.lhs) && term_ready(g.rhs);
    for (const auto& t : g.atom.args)
      if (!term_ready(t)) return false;
    return true;
  };
  std::vector<const Goal*> level0_filters;
  std::vector<const Goal*> pending;
  for (const auto& g : body)
    if (g.kind != Goal::Kind::positive) pending.push_back(&g);

  auto drain_ready = [&](std::vector<const Goal*>& into) {
    for (auto it = pending.begin(); it != pending.end();) {
      if (goal_ready(**it, planned)) {
        into.push_back(*it);
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
  };
  drain_ready(level0_filters);

  for (const auto& g : body) {
    if (g.kind != Goal::Kind::positive) continue;
    LevelPlan lvl;
    lvl.rel = &db.relation(g.atom.predicate);
    if (lvl.rel->arity() != g.atom.args.size())
      fail(ErrorCode::schema, "relation " + g.atom.predicate + " arity mismatch");
    for (const auto& t : g.atom.args) {
      ColumnAction a{ColumnAction::Kind::constant, Value(std::int64_t{0}), 0};
      if (!t.is_variable) {
        a.kind = ColumnAction::Kind::constant;
        a.constant = t.constant;
      } else {
        std::size_t s = slot.at(t.name);
        a.var = s;
        if (planned[s]) {
          a.kind = ColumnAction::Kind::check;
        } else {
          a.kind = ColumnAction::Kind::bind;
          planned[s] = true;
        }
      }
      lvl.actions.push_back(std::move(a));
    }
    drain_ready(lvl.filters);
    levels.push_back(std::move(lvl));
  }
  if (!pending.empty())
    fail(ErrorCode::safety, "rule " + base.id + ": goal over unbound variables");

  std::map<std::string, Value> scratch;
  auto filter_holds = [&](const Goal& g) {
    scratch.clear();
    auto put = [&](const Term& t) {
      if (t.is_variable) scratch.emplace(t.name, vals[slot.at(t.name)]);
    };
    if (g.kind == Goal::Kind::comparison) {
      put(g.lhs);
      put(g.rhs);
    } else {
      for (const auto& t : g.atom.args) put(t);
    }
    return goal_holds(db, g, scratch);
  };

  for (const Goal* g : level0_filters)
    if (!filter_holds(*g)) return;

  // Depth-first over literal levels, scanning each relation in row order.
  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == levels.size()) {
      emit(vals);
      return;
    }
    const LevelPlan& lvl = levels[depth];
    for (const Row& row : lvl.rel->rows) {
      bool ok = true;
      for (std::size_t c = 0; c < lvl.actions.size() && ok; ++c) {
        const ColumnAction& a = lvl.actions[c];
        switch (a.kind) {
          case ColumnAction::Kind::constant:
            ok = row[c] == a.constant;
            break;
          case ColumnAction::Kind::check:
            ok = row[c] == vals[a.var];
            break;
          case ColumnAction::Kind::bind:
            vals[a.var] = row[c];
            break;
        }
      }
      // A variable repeated inside one literal binds at its first column and
      // checks at later ones; bind happens before check sees it.
      if (!ok) continue;
      bool filters_ok = true;
      for (const Goal* g : lvl.filters)
        if (!filter_holds(*g)) {
          filters_ok = false;
          break;
        }
      if (filters_ok) self(self, depth + 1);
    }
  };
  recurse(recurse, 0);
}

namespace {

Row head_tuple(const Atom& head, const Rule& base, const Row& valuation) {
  Row out;
  out.reserve(head.args.size());
  for (const auto& t : head.args) {
    if (t.is_variable)
      out.push_back(valuation[*base.variable_index(t.name)]);
    else
      out.push_back(t.constant);
  }
  return out;
}

}  // namespace

Relation evaluate(const Query& q, const Database& db) {
  validate_query(q, db);
  std::vector<ValueType> types;
  for (const auto& t : q.rules[0].head.args)
    types.push_back(term_type(q.rules[0], t, db));
  for (const auto& r : q.rules)
    for (std::size_t i = 0; i < r.head.args.size(); ++i)
      if (term_type(r, r.head.args[i], db) != types[i])
        fail(ErrorCode::schema, "rules disagree on the type of head column " +
                                    std::to_string(i + 1));
  std::vector<Row> rows;
  for (const auto& r : q.rules)
    for_each_satisfying(r, r.body, db, {}, [&](const Row& valuation) {
      rows.push_back(head_tuple(r.head, r, valuation));
    });
  std::vector<std::string> names;
  for (std::size_t i = 0; i < q.head_arity; ++i)
    names.push_back("c" + std::to_string(i + 1));
  return make_relation(q.head_predicate, std::move(names), std::move(types),
                       std::move(rows));
}

std::set<Row> existing_matching_answers(const Query& q, const Database& db,
                                        const PTuple& pt) {
  validate_query(q, db);
  std::set<Row> out;
  for (const auto& r : q.rules) {
    UnifiedRule u = unify_with_ptuple(r, pt);
    if (u.contradiction) continue;
    for_each_satisfying(u.base, u.body, db, u.bindings, [&](const Row& valuation) {
      Row t = head_tuple(u.head, u.base, valuation);
      if (matches_ptuple(t, pt)) out.insert(std::move(t));
    });
  }
  return out;
}

}  // namespace provsumm
