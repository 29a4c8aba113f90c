#include "provsumm/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "provsumm/errors.hpp"

namespace provsumm {

ValueType type_of(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) ? ValueType::integer : ValueType::text;
}

const char* type_name(ValueType t) {
  return t == ValueType::integer ? "int" : "string";
}

bool value_less(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() < b.index();
  return a < b;
}

std::string to_plain(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::string to_display(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  std::string out = "'";
  for (char c : std::get<std::string>(v)) {
    if (c == '\'') out += "''";
    else out += c;
  }
  out += "'";
  return out;
}

const char* comparator_symbol(Comparator c) {
  switch (c) {
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::ne: return "!=";
    case Comparator::ge: return ">=";
    case Comparator::gt: return ">";
  }
  return "?";
}

bool compare_values(const Value& a, Comparator c, const Value& b) {
  if (type_of(a) != type_of(b)) {
    fail(ErrorCode::schema, "cannot compare " + to_display(a) + " (" +
                                type_name(type_of(a)) + ") with " + to_display(b) +
                                " (" + type_name(type_of(b)) + ")");
  }
  auto cmp = [&](auto&& x, auto&& y) {
    switch (c) {
      case Comparator::lt: return x < y;
      case Comparator::le: return x <= y;
      case Comparator::ne: return x != y;
      case Comparator::ge: return x >= y;
      case Comparator::gt: return x > y;
    }
    return false;
  };
  if (auto* i = std::get_if<std::int64_t>(&a)) return cmp(*i, std::get<std::int64_t>(b));
  return cmp(std::get<std::string>(a), std::get<std::string>(b));
}

Term Term::var(std::string n) {
  Term t;
  t.is_variable = true;
  t.name = std::move(n);
  return t;
}

Term Term::lit(Value v) {
  Term t;
  t.is_variable = false;
  t.constant = std::move(v);
  return t;
}

std::size_t Rule::literal_goal_count() const {
  std::size_t n = 0;
  for (const auto& g : body)
    if (g.is_literal()) ++n;
  return n;
}

std::optional<std::size_t> Rule::variable_index(const std::string& name) const {
  for (std::size_t i = 0; i < variable_order.size(); ++i)
    if (variable_order[i] == name) return i;
  return std::nullopt;
}

std::size_t PTuple::constant_count() const {
  std::size_t n = 0;
  for (const auto& a : args)
    if (!a.is_placeholder) ++n;
  return n;
}

namespace {

// ---- lexer ----

enum class TokKind {
  ident,
  integer,
  text,
  lparen,
  rparen,
  comma,
  period,
  implies,  // :-
  cmp,
  eof,
};

struct Token {
  TokKind kind = TokKind::eof;
  std::string text;
  std::int64_t number = 0;
  Comparator cmp = Comparator::lt;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = TokKind::eof;
      return t;
    }
    char c = src_[pos_];
    if (c == '(') return punct(t, TokKind::lparen);
    if (c == ')') return punct(t, TokKind::rparen);
    if (c == ',') return punct(t, TokKind::comma);
    if (c == '.') return punct(t, TokKind::period);
    if (c == ':') {
      if (peek(1) == '-') {
        advance();
        advance();
        t.kind = TokKind::implies;
        return t;
      }
      error("stray ':'");
    }
    if (c == '<' || c == '>' || c == '!') {
      advance();
      bool eq = pos_ < src_.size() && src_[pos_] == '=';
      if (eq) advance();
      t.kind = TokKind::cmp;
      if (c == '<') t.cmp = eq ? Comparator::le : Comparator::lt;
      else if (c == '>') t.cmp = eq ? Comparator::ge : Comparator::gt;
      else if (eq) t.cmp = Comparator::ne;
      else error("stray '!'");
      return t;
    }
    if (c == '=') error("'=' is not a comparison; repeat the variable instead");
    if (c == '\'') return lex_string(t);
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return lex_int(t);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(t);
    error(std::string("unexpected character '") + c + "'");
  }

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::parse,
         "line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + msg);
  }

 private:
  char peek(std::size_t off) const {
    return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
  }

  void advance() {
    if (pos_ < src_.size()) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token punct(Token t, TokKind k) {
    t.kind = k;
    advance();
    return t;
  }

  Token lex_string(Token t) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) error("unterminated string");
      char c = src_[pos_];
      if (c == '\'') {
        if (peek(1) == '\'') {  // '' escapes a quote
          out += '\'';
          advance();
          advance();
          continue;
        }
        advance();
        break;
      }
      out += c;
      advance();
    }
    t.kind = TokKind::text;
    t.text = std::move(out);
    return t;
  }

  Token lex_int(Token t) {
    std::string digits;
    if (src_[pos_] == '-') {
      digits += '-';
      advance();
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
        error("expected digits after '-'");
    }
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      digits += src_[pos_];
      advance();
    }
    t.kind = TokKind::integer;
    try {
      t.number = std::stoll(digits);
    } catch (const std::exception&) {
      error("integer out of range: " + digits);
    }
    return t;
  }

  Token lex_ident(Token t) {
    std::string out;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        out += c;
        advance();
      } else {
        break;
      }
    }
    t.kind = TokKind::ident;
    t.text = std::move(out);
    return t;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_variable_name(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

// ---- parser ----

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) { shift(); }

  Query parse_query() {
    Query q;
    while (cur_.kind != TokKind::eof) {
      Rule r = parse_rule();
      r.id = "r" + std::to_string(q.rules.size() + 1);
      finish_rule(r);
      if (q.rules.empty()) {
        q.head_predicate = r.head.predicate;
        q.head_arity = r.head.args.size();
      } else if (r.head.predicate != q.head_predicate ||
                 r.head.args.size() != q.head_arity) {
        fail(ErrorCode::parse, "rule " + r.id + " head " + r.head.predicate + "/" +
                                   std::to_string(r.head.args.size()) +
                                   " differs from " + q.head_predicate + "/" +
                                   std::to_string(q.head_arity) +
                                   "; all rules must share one head");
      }
      q.rules.push_back(std::move(r));
    }
    if (q.rules.empty()) fail(ErrorCode::parse, "program contains no rules");
    for (const auto& r : q.rules)
      for (const auto& g : r.body)
        if (g.is_literal() && g.atom.predicate == q.head_predicate)
          fail(ErrorCode::parse, "rule " + r.id + " uses head predicate " +
                                     q.head_predicate +
                                     " in its body; bodies are EDB-only");
    check_arities(q);
    return q;
  }

 private:
  void shift() { cur_ = lex_.next(); }

  void expect(TokKind k, const std::string& what) {
    if (cur_.kind != k) lex_.error("expected " + what);
    shift();
  }

  Term parse_term() {
    if (cur_.kind == TokKind::integer) {
      Term t = Term::lit(Value(cur_.number));
      shift();
      return t;
    }
    if (cur_.kind == TokKind::text) {
      Term t = Term::lit(Value(cur_.text));
      shift();
      return t;
    }
    if (cur_.kind == TokKind::ident) {
      if (!is_variable_name(cur_.text))
        lex_.error("'" + cur_.text +
                   "': variables start uppercase; quote string constants");
      Term t = Term::var(cur_.text);
      shift();
      return t;
    }
    lex_.error("expected a variable or constant");
  }

  Atom parse_atom() {
    if (cur_.kind != TokKind::ident) lex_.error("expected a relation name");
    std::string predicate = cur_.text;
    shift();
    return parse_atom_args(std::move(predicate));
  }

  Atom parse_atom_args(std::string predicate) {
    Atom a;
    a.predicate = std::move(predicate);
    expect(TokKind::lparen, "'('");
    while (true) {
      a.args.push_back(parse_term());
      if (cur_.kind == TokKind::comma) {
        shift();
        continue;
      }
      break;
    }
    expect(TokKind::rparen, "')'");
    return a;
  }

  Goal parse_goal() {
    Goal g;
    if (cur_.kind == TokKind::ident && cur_.text == "not") {
      shift();
      g.kind = Goal::Kind::negated;
      g.atom = parse_atom();
      return g;
    }
    // An identifier opens a literal when '(' follows, else a comparison.
    if (cur_.kind == TokKind::ident) {
      std::string name = cur_.text;
      shift();
      if (cur_.kind == TokKind::lparen) {
        g.kind = Goal::Kind::positive;
        g.atom = parse_atom_args(std::move(name));
        return g;
      }
      if (!is_variable_name(name))
        lex_.error("'" + name + "': variables start uppercase; quote string constants");
      return parse_comparison(Term::var(name));
    }
    if (cur_.kind == TokKind::integer || cur_.kind == TokKind::text) {
      Term lhs = parse_term();
      return parse_comparison(std::move(lhs));
    }
    lex_.error("expected a goal");
  }

  Goal parse_comparison(Term lhs) {
    if (cur_.kind != TokKind::cmp)
      lex_.error("expected a comparison operator (<, <=, !=, >=, >)");
    Goal g;
    g.kind = Goal::Kind::comparison;
    g.cmp = cur_.cmp;
    g.lhs = std::move(lhs);
    shift();
    g.rhs = parse_term();
    if (!g.lhs.is_variable && !g.rhs.is_variable &&
        type_of(g.lhs.constant) != type_of(g.rhs.constant))
      lex_.error("comparison mixes an integer with a string");
    return g;
  }

  Rule parse_rule() {
    Rule r;
    r.head = parse_atom();
    expect(TokKind::implies, "':-'");
    while (true) {
      r.body.push_back(parse_goal());
      if (cur_.kind == TokKind::comma) {
        shift();
        continue;
      }
      break;
    }
    expect(TokKind::period, "'.' at end of rule");
    return r;
  }

  static void collect_term(const Term& t, std::vector<std::string>& order,
                           std::set<std::string>& seen) {
    if (t.is_variable && seen.insert(t.name).second) order.push_back(t.name);
  }

  void finish_rule(Rule& r) {
    std::set<std::string> seen;
    for (const auto& t : r.head.args) collect_term(t, r.variable_order, seen);
    for (const auto& g : r.body) {
      if (g.is_literal()) {
        for (const auto& t : g.atom.args) collect_term(t, r.variable_order, seen);
      } else {
        collect_term(g.lhs, r.variable_order, seen);
        collect_term(g.rhs, r.variable_order, seen);
      }
    }
    bool has_positive = false;
    std::set<std::string> safe;
    for (const auto& g : r.body)
      if (g.kind == Goal::Kind::positive) {
        has_positive = true;
        for (const auto& t : g.atom.args)
          if (t.is_variable) safe.insert(t.name);
      }
    std::vector<std::string> unsafe;
    for (const auto& v : r.variable_order)
      if (!safe.count(v)) unsafe.push_back(v);
    if (unsafe.empty() && !has_positive)
      fail(ErrorCode::parse, "rule " + r.id + " needs at least one positive literal");
    if (!unsafe.empty()) {
      std::string names;
      for (const auto& v : unsafe) {
        if (!names.empty()) names += ", ";
        names += v;
      }
      fail(ErrorCode::safety, "rule " + r.id + " is unsafe: variable" +
                                  (unsafe.size() > 1 ? "s " : " ") + names +
                                  " must occur in a positive body literal");
    }
  }

  void check_arities(const Query& q) {
    std::map<std::string, std::size_t> arity;
    for (const auto& r : q.rules)
      for (const auto& g : r.body) {
        if (!g.is_literal()) continue;
        auto [it, inserted] = arity.emplace(g.atom.predicate, g.atom.args.size());
        if (!inserted && it->second != g.atom.args.size())
          fail(ErrorCode::parse, "relation " + g.atom.predicate +
                                     " used with arities " +
                                     std::to_string(it->second) + " and " +
                                     std::to_string(g.atom.args.size()));
      }
  }

  Lexer lex_;
  Token cur_;
};

std::string term_text(const Term& t) {
  return t.is_variable ? t.name : to_display(t.constant);
}

std::string atom_text(const Atom& a) {
  std::string out = a.predicate + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ",";
    out += term_text(a.args[i]);
  }
  out += ")";
  return out;
}

}  // namespace

std::string print_rule(const Rule& r) {
  std::string out = atom_text(r.head) + " :- ";
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (i) out += ", ";
    const Goal& g = r.body[i];
    switch (g.kind) {
      case Goal::Kind::positive:
        out += atom_text(g.atom);
        break;
      case Goal::Kind::negated:
        out += "not " + atom_text(g.atom);
        break;
      case Goal::Kind::comparison:
        out += term_text(g.lhs) + " " + comparator_symbol(g.cmp) + " " +
               term_text(g.rhs);
        break;
    }
  }
  out += ".";
  return out;
}

std::string print_program(const Query& q) {
  std::string out;
  for (const auto& r : q.rules) out += print_rule(r) + "\n";
  return out;
}

Query parse_program(const std::string& text) {
  return Parser(text).parse_query();
}

std::string print_ptuple(const PTuple& pt) {
  std::string out = pt.predicate + "(";
  for (std::size_t i = 0; i < pt.args.size(); ++i) {
    if (i) out += ",";
    const auto& a = pt.args[i];
    out += a.is_placeholder ? a.placeholder : to_display(a.constant);
  }
  out += ")";
  return out;
}

std::string print_question(const ProvenanceQuestion& q) {
  return std::string(q.qtype == QuestionType::why ? "WHY " : "WHYNOT ") +
         print_ptuple(q.ptuple);
}

ProvenanceQuestion parse_question(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  if (!(in >> word)) fail(ErrorCode::question, "empty question");
  std::string upper;
  for (char c : word) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  ProvenanceQuestion q;
  if (upper == "WHY") q.qtype = QuestionType::why;
  else if (upper == "WHYNOT") q.qtype = QuestionType::whynot;
  else fail(ErrorCode::question, "question must start with WHY or WHYNOT, got '" + word + "'");

  std::string rest;
  std::getline(in, rest);
  Lexer lex(rest);
  Token t = lex.next();
  if (t.kind != TokKind::ident) fail(ErrorCode::question, "expected a predicate after " + upper);
  q.ptuple.predicate = t.text;
  t = lex.next();
  if (t.kind != TokKind::lparen) fail(ErrorCode::question, "expected '(' after predicate");
  std::set<std::string> names;
  while (true) {
    t = lex.next();
    PTupleArg arg;
    if (t.kind == TokKind::integer) {
      arg.constant = Value(t.number);
    } else if (t.kind == TokKind::text) {
      arg.constant = Value(t.text);
    } else if (t.kind == TokKind::ident && is_variable_name(t.text)) {
      arg.is_placeholder = true;
      arg.placeholder = t.text;
      if (!names.insert(t.text).second)
        fail(ErrorCode::question,
             "placeholder " + t.text + " repeats; placeholders must be distinct");
    } else {
      fail(ErrorCode::question, "expected a placeholder or constant in the p-tuple");
    }
    q.ptuple.args.push_back(std::move(arg));
    t = lex.next();
    if (t.kind == TokKind::comma) continue;
    if (t.kind == TokKind::rparen) break;
    fail(ErrorCode::question, "expected ',' or ')' in the p-tuple");
  }
  t = lex.next();
  if (t.kind != TokKind::eof) fail(ErrorCode::question, "trailing input after the p-tuple");
  return q;
}

UnifiedRule unify_with_ptuple(const Rule& r, const PTuple& pt) {
  if (pt.predicate != r.head.predicate)
    fail(ErrorCode::question, "p-tuple predicate " + pt.predicate +
                                  " does not match head " + r.head.predicate);
  if (pt.args.size() != r.head.args.size())
    fail(ErrorCode::question, "p-tuple arity " + std::to_string(pt.args.size()) +
                                  " does not match head arity " +
                                  std::to_string(r.head.args.size()));
  UnifiedRule u;
  u.base = r;
  for (std::size_t i = 0; i < pt.args.size(); ++i) {
    if (pt.args[i].is_placeholder) continue;
    const Value& c = pt.args[i].constant;
    const Term& h = r.head.args[i];
    if (h.is_variable) {
      auto [it, inserted] = u.bindings.emplace(h.name, c);
      if (!inserted && !(it->second == c)) u.contradiction = true;
    } else if (!(h.constant == c)) {
      u.contradiction = true;
    }
  }
  auto subst = [&](const Term& t) {
    if (t.is_variable) {
      auto it = u.bindings.find(t.name);
      if (it != u.bindings.end()) return Term::lit(it->second);
    }
    return t;
  };
  u.head.predicate = r.head.predicate;
  for (const auto& t : r.head.args) u.head.args.push_back(subst(t));
  for (const auto& g : r.body) {
    Goal out = g;
    if (g.is_literal()) {
      out.atom.args.clear();
      for (const auto& t : g.atom.args) out.atom.args.push_back(subst(t));
    } else {
      out.lhs = subst(g.lhs);
      out.rhs = subst(g.rhs);
    }
    u.body.push_back(std::move(out));
  }
  for (const auto& g : u.body) {
    // a binding that falsifies a now-constant comparison can never derive
    if (g.kind != Goal::Kind::comparison) continue;
    if (g.lhs.is_variable || g.rhs.is_variable) continue;
    if (type_of(g.lhs.constant) != type_of(g.rhs.constant)) continue;
    if (!compare_values(g.lhs.constant, g.cmp, g.rhs.constant)) u.contradiction = true;
  }
  for (const auto& v : r.variable_order)
    if (!u.bindings.count(v)) u.unbound_vars.push_back(v);
  return u;
}

bool matches_ptuple(const std::vector<Value>& tuple, const PTuple& pt) {
  if (tuple.size() != pt.args.size())
    fail(ErrorCode::question, "tuple arity " + std::to_string(tuple.size()) +
                                  " does not match p-tuple arity " +
                                  std::to_string(pt.args.size()));
  std::map<std::string, Value> bound;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    const auto& a = pt.args[i];
    if (a.is_placeholder) {
      auto [it, inserted] = bound.emplace(a.placeholder, tuple[i]);
      if (!inserted && !(it->second == tuple[i])) return false;
    } else if (!(a.constant == tuple[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace provsumm
