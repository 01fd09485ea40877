#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "nds/system_spec.hpp"

namespace nds {

namespace {

enum class Tok { End, Newline, Ident, Number, Punct };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1, col = 1;
};

// Newlines terminate statements only at bracket depth 0; '#' starts a
// comment running to end of line.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, tok_.line, tok_.col);
  }

 private:
  void advance() {
    skip_space();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    char c = src_[pos_];
    if (c == '\n') {
      bump();
      if (depth_ > 0) {
        advance();
        return;
      }
      tok_.kind = Tok::Newline;
      tok_.text = "\n";
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      tok_.kind = Tok::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        tok_.text += src_[pos_];
        bump();
      }
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      return;
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if (c == ')' || c == ']' || c == '}') --depth_;
    tok_.kind = Tok::Punct;
    tok_.text = std::string(1, c);
    bump();
  }

  void lex_number() {
    size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      bump();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      size_t mark = pos_;
      int mark_col = col_;
      bump();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) bump();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      } else {
        pos_ = mark;  // 'e' was an identifier start, not an exponent
        col_ = mark_col;
      }
    }
    tok_.kind = Tok::Number;
    tok_.text = std::string(src_.substr(start, pos_ - start));
    tok_.number = std::strtod(tok_.text.c_str(), nullptr);
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  int depth_ = 0;
  Token tok_;
};

const std::set<std::string>& builtin_functions() {
  static const std::set<std::string> b = {"sin", "cos", "tanh", "exp", "log", "abs", "sqrt"};
  return b;
}

const std::set<std::string>& statement_keywords() {
  static const std::set<std::string> k = {"system", "params", "func",   "fast",
                                          "slow",   "input",  "dyn",    "domain"};
  return k;
}

ExprKind builtin_kind(const std::string& name) {
  if (name == "sin") return ExprKind::Sin;
  if (name == "cos") return ExprKind::Cos;
  if (name == "tanh") return ExprKind::Tanh;
  if (name == "exp") return ExprKind::Exp;
  if (name == "log") return ExprKind::Log;
  if (name == "abs") return ExprKind::Abs;
  return ExprKind::Sqrt;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lx_(src) {}

  Expr parse_expr_only() {
    skip_newlines();
    Expr e = parse_expr();
    skip_newlines();
    if (lx_.peek().kind != Tok::End) lx_.fail("trailing input after expression");
    return e;
  }

  SystemSpec parse_system_file() {
    SystemSpec spec;
    spec.name = "unnamed";
    bool partition_declared = false;
    while (true) {
      skip_separators();
      const Token& t = lx_.peek();
      if (t.kind == Tok::End) break;
      if (t.kind != Tok::Ident) lx_.fail("expected a statement keyword");
      stmt_line_ = t.line;
      stmt_col_ = t.col;
      if (t.text == "system") {
        lx_.next();
        spec.name = expect_ident("system name");
      } else if (t.text == "params") {
        lx_.next();
        parse_params(spec);
      } else if (t.text == "func") {
        lx_.next();
        parse_func(spec);
      } else if (t.text == "fast" || t.text == "slow") {
        bool is_fast = t.text == "fast";
        lx_.next();
        partition_declared = true;
        auto& list = is_fast ? spec.fast_states : spec.slow_states;
        list.push_back(expect_ident("state name"));
        while (accept_punct(",")) list.push_back(expect_ident("state name"));
      } else if (t.text == "input") {
        lx_.next();
        InputDef in;
        in.name = expect_ident("input name");
        expect_punct("=");
        in.signal = parse_expr();
        record_stmt_loc(in.name);
        spec.inputs.push_back(std::move(in));
      } else if (t.text == "dyn") {
        lx_.next();
        std::string state = expect_ident("state name");
        expect_punct("=");
        Expr rhs = parse_expr();
        bool declared =
            std::count(spec.fast_states.begin(), spec.fast_states.end(), state) ||
            std::count(spec.slow_states.begin(), spec.slow_states.end(), state);
        if (!declared) {
          if (partition_declared)
            throw ParseError("dyn for undeclared state '" + state + "'", stmt_line_, stmt_col_);
          spec.slow_states.push_back(state);  // monolithic system: all slow
        }
        record_stmt_loc(state);
        spec.equations.emplace_back(state, std::move(rhs));
      } else if (t.text == "domain") {
        lx_.next();
        parse_domain(spec);
      } else {
        lx_.fail("unknown statement '" + t.text + "'");
      }
      end_statement();
    }
    finish_validation(spec);
    return spec;
  }

  const std::map<std::string, std::pair<int, int>>& stmt_locs() const { return stmt_locs_; }

 private:
  void record_stmt_loc(const std::string& key) {
    stmt_locs_.emplace(key, std::make_pair(stmt_line_, stmt_col_));
  }

  void skip_newlines() {
    while (lx_.peek().kind == Tok::Newline) lx_.next();
  }

  void skip_separators() {
    while (lx_.peek().kind == Tok::Newline ||
           (lx_.peek().kind == Tok::Punct && lx_.peek().text == ";"))
      lx_.next();
  }

  void end_statement() {
    const Token& t = lx_.peek();
    if (t.kind == Tok::End || t.kind == Tok::Newline) return;
    if (t.kind == Tok::Punct && t.text == ";") return;
    lx_.fail("expected end of statement, got '" + t.text + "'");
  }

  std::string expect_ident(const char* what) {
    const Token& t = lx_.peek();
    if (t.kind != Tok::Ident) lx_.fail(std::string("expected ") + what);
    return lx_.next().text;
  }

  bool accept_punct(const char* p) {
    const Token& t = lx_.peek();
    if (t.kind == Tok::Punct && t.text == p) {
      lx_.next();
      return true;
    }
    return false;
  }

  void expect_punct(const char* p) {
    if (!accept_punct(p)) lx_.fail(std::string("expected '") + p + "'");
  }

  void parse_params(SystemSpec& spec) {
    expect_punct("{");
    while (true) {
      skip_separators();
      if (accept_punct("}")) break;
      ParamDef pd;
      pd.name = expect_ident("parameter name");
      record_stmt_loc(pd.name);
      expect_punct("=");
      Expr value = parse_expr();
      Env env;
      for (const auto& earlier : spec.params) env[earlier.name] = earlier.value;
      try {
        pd.value = eval(value, env);
      } catch (const EvalError& e) {
        throw ParseError(std::string("parameter '") + pd.name + "': " + e.what(), stmt_line_,
                         stmt_col_);
      }
      spec.params.push_back(std::move(pd));
      skip_separators();
      if (accept_punct("}")) break;
    }
  }

  void parse_func(SystemSpec& spec) {
    FuncDef fd;
    fd.name = expect_ident("function name");
    record_stmt_loc(fd.name);
    expect_punct("(");
    fd.params.push_back(expect_ident("parameter name"));
    while (accept_punct(",")) fd.params.push_back(expect_ident("parameter name"));
    expect_punct(")");
    expect_punct("=");
    fd.body = parse_expr();
    spec.funcs.push_back(std::move(fd));
  }

  void parse_domain(SystemSpec& spec) {
    while (true) {
      std::string state = expect_ident("state name");
      record_stmt_loc("domain " + state);
      const Token& kw = lx_.peek();
      if (kw.kind != Tok::Ident || kw.text != "in") lx_.fail("expected 'in'");
      lx_.next();
      expect_punct("[");
      Interval iv;
      iv.lo = parse_const("domain bound");
      expect_punct(",");
      iv.hi = parse_const("domain bound");
      expect_punct("]");
      spec.domain[state] = iv;
      // a ';' continues the clause list only when followed by another clause
      if (lx_.peek().kind == Tok::Punct && lx_.peek().text == ";") {
        lx_.next();
        if (lx_.peek().kind == Tok::Ident && !statement_keywords().count(lx_.peek().text))
          continue;
      }
      break;
    }
  }

  double parse_const(const char* what) {
    Expr e = parse_expr();
    try {
      return eval(e, {});
    } catch (const EvalError&) {
      lx_.fail(std::string(what) + " must be a constant");
    }
  }

  // expression grammar: + - | * / | unary - | ^ (right assoc) | primary
  Expr parse_expr() { return parse_add(); }

  Expr parse_add() {
    Expr lhs = parse_mul();
    while (true) {
      if (accept_punct("+"))
        lhs = std::move(lhs) + parse_mul();
      else if (accept_punct("-"))
        lhs = std::move(lhs) - parse_mul();
      else
        return lhs;
    }
  }

  Expr parse_mul() {
    Expr lhs = parse_unary();
    while (true) {
      if (accept_punct("*"))
        lhs = std::move(lhs) * parse_unary();
      else if (accept_punct("/"))
        lhs = std::move(lhs) / parse_unary();
      else
        return lhs;
    }
  }

  Expr parse_unary() {
    if (accept_punct("-")) return -parse_unary();
    if (accept_punct("+")) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept_punct("^")) return pow_expr(std::move(base), parse_unary());
    return base;
  }

  Expr parse_primary() {
    Token t = lx_.peek();  // copy: the lexer token is invalidated by next()
    if (t.kind == Tok::Number) return Expr::constant(lx_.next().number);
    if (t.kind == Tok::Ident) {
      std::string name = lx_.next().text;
      if (accept_punct("(")) {
        std::vector<Expr> args;
        if (!accept_punct(")")) {
          args.push_back(parse_expr());
          while (accept_punct(",")) args.push_back(parse_expr());
          expect_punct(")");
        }
        if (builtin_functions().count(name)) {
          if (args.size() != 1)
            throw ParseError(name + " takes exactly one argument", t.line, t.col);
          return Expr::unary(builtin_kind(name), std::move(args[0]));
        }
        return Expr::call(std::move(name), std::move(args));
      }
      return Expr::symbol(std::move(name));
    }
    if (accept_punct("(")) {
      Expr e = parse_expr();
      expect_punct(")");
      return e;
    }
    lx_.fail("expected an expression");
  }

  void finish_validation(SystemSpec& spec) {
    try {
      validate(spec);
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      // map bare validation errors onto recorded statement locations;
      // messages are prefixed with the statement key they refer to
      auto key = e.message().substr(0, e.message().find(':'));
      auto it = stmt_locs_.find(key);
      int ln = it != stmt_locs_.end() ? it->second.first : 1;
      int co = it != stmt_locs_.end() ? it->second.second : 1;
      throw ParseError(e.message(), ln, co);
    }
  }

  Lexer lx_;
  int stmt_line_ = 1, stmt_col_ = 1;
  std::map<std::string, std::pair<int, int>> stmt_locs_;
};

// `key` is the statement name the parser recorded a location for; messages
// are prefixed with it so parse_system can attach line/column info.
void check_symbols(const Expr& e, const std::set<std::string>& allowed,
                   const std::set<std::string>& known_funcs, const std::string& key) {
  for (const auto& s : free_symbols(e))
    if (!allowed.count(s)) throw ParseError(key + ": undefined symbol '" + s + "'", 0, 0);
  for (const auto& f : called_functions(e)) {
    if (f == "__sgn") continue;
    if (!known_funcs.count(f)) throw ParseError(key + ": undefined function '" + f + "'", 0, 0);
  }
}

}  // namespace

std::vector<std::string> SystemSpec::state_order() const {
  std::vector<std::string> order = fast_states;
  order.insert(order.end(), slow_states.begin(), slow_states.end());
  return order;
}

const Expr* SystemSpec::equation_for(const std::string& state) const {
  for (const auto& [s, e] : equations)
    if (s == state) return &e;
  return nullptr;
}

std::optional<double> SystemSpec::param_value(const std::string& pname) const {
  for (const auto& p : params)
    if (p.name == pname) return p.value;
  return std::nullopt;
}

double SystemSpec::epsilon() const {
  if (auto v = param_value("epsilon")) return *v;
  return 1.0;
}

Interval SystemSpec::domain_for(const std::string& state) const {
  auto it = domain.find(state);
  if (it != domain.end()) return it->second;
  return Interval{-10.0, 10.0};
}

void validate(const SystemSpec& spec) {
  if (spec.equations.empty()) throw ParseError("no system: no dyn equations", 1, 1);

  std::set<std::string> states;
  for (const auto& lists : {spec.fast_states, spec.slow_states})
    for (const auto& s : lists) {
      if (s == "t") throw ParseError("'t' is reserved for time", 0, 0);
      if (!states.insert(s).second) throw ParseError(s + ": duplicate state '" + s + "'", 0, 0);
    }

  std::set<std::string> param_names;
  for (const auto& p : spec.params) {
    if (p.name == "t") throw ParseError("'t' is reserved for time", 0, 0);
    if (states.count(p.name))
      throw ParseError(p.name + ": parameter '" + p.name + "' collides with a state", 0, 0);
    if (!param_names.insert(p.name).second)
      throw ParseError(p.name + ": duplicate parameter '" + p.name + "'", 0, 0);
  }

  std::set<std::string> func_names;
  for (const auto& f : spec.funcs) {
    if (builtin_functions().count(f.name))
      throw ParseError(f.name + ": function '" + f.name + "' shadows a builtin", 0, 0);
    if (states.count(f.name) || param_names.count(f.name))
      throw ParseError(f.name + ": function '" + f.name + "' collides with another name", 0, 0);
    if (!func_names.insert(f.name).second)
      throw ParseError(f.name + ": duplicate function '" + f.name + "'", 0, 0);
  }

  std::set<std::string> input_names;
  for (const auto& in : spec.inputs) {
    if (states.count(in.name) || param_names.count(in.name) || func_names.count(in.name) ||
        in.name == "t")
      throw ParseError(in.name + ": input '" + in.name + "' collides with another name", 0, 0);
    if (!input_names.insert(in.name).second)
      throw ParseError(in.name + ": duplicate input '" + in.name + "'", 0, 0);
  }

  // function bodies: formals and parameters only; call graph must be acyclic
  for (const auto& f : spec.funcs) {
    std::set<std::string> allowed(param_names);
    allowed.insert(f.params.begin(), f.params.end());
    check_symbols(f.body, allowed, func_names, f.name);
  }
  {
    // depth-first cycle check over function calls
    std::map<std::string, int> mark;  // 0 new, 1 visiting, 2 done
    FunctionSet fs = spec.function_set();
    std::function<void(const std::string&)> visit = [&](const std::string& fname) {
      int& m = mark[fname];
      if (m == 1) throw ParseError(fname + ": recursive function '" + fname + "'", 0, 0);
      if (m == 2) return;
      m = 1;
      const FuncDef* def = fs.find(fname);
      if (def)
        for (const auto& callee : called_functions(def->body))
          if (callee != "__sgn") visit(callee);
      m = 2;
    };
    for (const auto& f : spec.funcs) visit(f.name);
  }

  for (const auto& in : spec.inputs) {
    std::set<std::string> allowed(param_names);
    allowed.insert("t");
    check_symbols(in.signal, allowed, func_names, in.name);
  }

  // equations: exactly one per state
  std::set<std::string> eq_states;
  for (const auto& [s, rhs] : spec.equations) {
    if (!states.count(s)) throw ParseError(s + ": dyn for undeclared state '" + s + "'", 0, 0);
    if (!eq_states.insert(s).second)
      throw ParseError(s + ": duplicate equation for state '" + s + "'", 0, 0);
    std::set<std::string> allowed(states);
    allowed.insert(param_names.begin(), param_names.end());
    allowed.insert(input_names.begin(), input_names.end());
    allowed.insert("t");
    check_symbols(rhs, allowed, func_names, s);
  }
  for (const auto& s : states)
    if (!eq_states.count(s)) throw ParseError(s + ": missing equation for state '" + s + "'", 0, 0);

  if (!spec.fast_states.empty() && !spec.has_epsilon())
    throw ParseError("missing epsilon designation: fast states declared but no "
                     "'epsilon' parameter",
                     1, 1);
  if (spec.has_epsilon() && spec.epsilon() < 0)
    throw ParseError("epsilon must be nonnegative", 1, 1);

  for (const auto& [s, iv] : spec.domain) {
    if (!states.count(s))
      throw ParseError("domain " + s + ": domain for undeclared state '" + s + "'", 0, 0);
    if (!(iv.lo < iv.hi))
      throw ParseError("domain " + s + ": empty interval for '" + s + "'", 0, 0);
  }
}

SystemSpec parse_system(std::string_view text) {
  Parser p(text);
  return p.parse_system_file();
}

Expr parse_expression(std::string_view text) {
  Parser p(text);
  return p.parse_expr_only();
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_source(const SystemSpec& spec) {
  std::ostringstream os;
  os << "system " << spec.name << "\n";
  if (!spec.params.empty()) {
    os << "params { ";
    for (size_t i = 0; i < spec.params.size(); ++i) {
      if (i) os << "; ";
      os << spec.params[i].name << " = " << format_value(spec.params[i].value);
    }
    os << " }\n";
  }
  for (const auto& f : spec.funcs) {
    os << "func " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) os << ", ";
      os << f.params[i];
    }
    os << ") = " << to_string(f.body) << "\n";
  }
  auto emit_states = [&os](const char* kw, const std::vector<std::string>& names) {
    if (names.empty()) return;
    os << kw << " ";
    for (size_t i = 0; i < names.size(); ++i) {
      if (i) os << ", ";
      os << names[i];
    }
    os << "\n";
  };
  emit_states("fast", spec.fast_states);
  emit_states("slow", spec.slow_states);
  for (const auto& in : spec.inputs)
    os << "input " << in.name << " = " << to_string(in.signal) << "\n";
  for (const auto& [s, rhs] : spec.equations) os << "dyn " << s << " = " << to_string(rhs) << "\n";
  if (!spec.domain.empty()) {
    os << "domain ";
    bool first = true;
    for (const auto& [s, iv] : spec.domain) {
      if (!first) os << "; ";
      first = false;
      os << s << " in [" << format_value(iv.lo) << ", " << format_value(iv.hi) << "]";
    }
    os << "\n";
  }
  return os.str();
}

bool structurally_equal(const SystemSpec& a, const SystemSpec& b) {
  if (a.name != b.name || a.fast_states != b.fast_states || a.slow_states != b.slow_states)
    return false;
  if (a.params.size() != b.params.size() || a.funcs.size() != b.funcs.size() ||
      a.inputs.size() != b.inputs.size() || a.equations.size() != b.equations.size() ||
      a.domain.size() != b.domain.size())
    return false;
  for (size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name || a.params[i].value != b.params[i].value)
      return false;
  for (size_t i = 0; i < a.funcs.size(); ++i) {
    if (a.funcs[i].name != b.funcs[i].name || a.funcs[i].params != b.funcs[i].params ||
        !structurally_equal(a.funcs[i].body, b.funcs[i].body))
      return false;
  }
  for (size_t i = 0; i < a.inputs.size(); ++i)
    if (a.inputs[i].name != b.inputs[i].name ||
        !structurally_equal(a.inputs[i].signal, b.inputs[i].signal))
      return false;
  for (size_t i = 0; i < a.equations.size(); ++i)
    if (a.equations[i].first != b.equations[i].first ||
        !structurally_equal(a.equations[i].second, b.equations[i].second))
      return false;
  for (const auto& [s, iv] : a.domain) {
    auto it = b.domain.find(s);
    if (it == b.domain.end() || it->second.lo != iv.lo || it->second.hi != iv.hi) return false;
  }
  return true;
}

}  // namespace nds
