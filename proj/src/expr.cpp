#include "nds/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nds {

bool is_unary(ExprKind k) {
  switch (k) {
    case ExprKind::Neg:
    case ExprKind::Sin:
    case ExprKind::Cos:
    case ExprKind::Tanh:
    case ExprKind::Exp:
    case ExprKind::Log:
    case ExprKind::Abs:
    case ExprKind::Sqrt:
      return true;
    default:
      return false;
  }
}

bool is_binary(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub:
    case ExprKind::Mul:
    case ExprKind::Div:
    case ExprKind::Pow:
      return true;
    default:
      return false;
  }
}

Expr Expr::constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Constant;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::symbol(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Symbol;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(ExprKind k, Expr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->args = {std::move(a)};
  return Expr(std::move(n));
}

Expr Expr::binary(ExprKind k, Expr a, Expr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->args = {std::move(a), std::move(b)};
  return Expr(std::move(n));
}

Expr Expr::call(std::string fn, std::vector<Expr> args) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Call;
  n->name = std::move(fn);
  n->args = std::move(args);
  return Expr(std::move(n));
}

bool Expr::is_constant(double v) const {
  return valid() && node_->kind == ExprKind::Constant && node_->value == v;
}

namespace {

bool both_const(const Expr& a, const Expr& b) {
  return a.kind() == ExprKind::Constant && b.kind() == ExprKind::Constant;
}

}  // namespace

// Smart constructors fold constants and apply the 0/1 identities; anything
// fancier is out of scope (the finite-difference cross-checks guard these).

Expr operator-(Expr a) {
  if (a.kind() == ExprKind::Constant) return Expr::constant(-a.node().value);
  if (a.kind() == ExprKind::Neg) return a.node().args[0];
  return Expr::unary(ExprKind::Neg, std::move(a));
}

Expr operator+(Expr a, Expr b) {
  if (both_const(a, b)) return Expr::constant(a.node().value + b.node().value);
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr::binary(ExprKind::Add, std::move(a), std::move(b));
}

Expr operator-(Expr a, Expr b) {
  if (both_const(a, b)) return Expr::constant(a.node().value - b.node().value);
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -std::move(b);
  return Expr::binary(ExprKind::Sub, std::move(a), std::move(b));
}

Expr operator*(Expr a, Expr b) {
  if (both_const(a, b)) return Expr::constant(a.node().value * b.node().value);
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return Expr::binary(ExprKind::Mul, std::move(a), std::move(b));
}

Expr operator/(Expr a, Expr b) {
  if (both_const(a, b) && b.node().value != 0.0)
    return Expr::constant(a.node().value / b.node().value);
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr::constant(0.0);
  return Expr::binary(ExprKind::Div, std::move(a), std::move(b));
}

Expr pow_expr(Expr base, Expr exponent) {
  if (exponent.is_constant(1.0)) return base;
  if (exponent.is_constant(0.0)) return Expr::constant(1.0);
  if (both_const(base, exponent))
    return Expr::constant(std::pow(base.node().value, exponent.node().value));
  return Expr::binary(ExprKind::Pow, std::move(base), std::move(exponent));
}

FunctionSet::FunctionSet(const std::vector<FuncDef>& defs) {
  for (const auto& d : defs) add(d);
}

void FunctionSet::add(FuncDef def) {
  std::string key = def.name;
  defs_.insert_or_assign(std::move(key), std::move(def));
}

const FuncDef* FunctionSet::find(const std::string& name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void eval_domain_error(const char* what, double arg) {
  std::ostringstream os;
  os << "domain error: " << what << " of " << arg;
  throw EvalError(os.str());
}

double checked(double v, const char* op) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite result in " << op;
    throw EvalError(os.str());
  }
  return v;
}

}  // namespace

double eval(const Expr& e, const Env& env, const FunctionSet& funcs) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return n.value;
    case ExprKind::Symbol: {
      auto it = env.find(n.name);
      if (it == env.end()) throw EvalError("unbound symbol: " + n.name);
      return it->second;
    }
    case ExprKind::Neg:
      return -eval(n.args[0], env, funcs);
    case ExprKind::Sin:
      return std::sin(eval(n.args[0], env, funcs));
    case ExprKind::Cos:
      return std::cos(eval(n.args[0], env, funcs));
    case ExprKind::Tanh:
      return std::tanh(eval(n.args[0], env, funcs));
    case ExprKind::Exp:
      return checked(std::exp(eval(n.args[0], env, funcs)), "exp");
    case ExprKind::Log: {
      double a = eval(n.args[0], env, funcs);
      if (a <= 0.0) eval_domain_error("log", a);
      return std::log(a);
    }
    case ExprKind::Abs:
      return std::abs(eval(n.args[0], env, funcs));
    case ExprKind::Sqrt: {
      double a = eval(n.args[0], env, funcs);
      if (a < 0.0) eval_domain_error("sqrt", a);
      return std::sqrt(a);
    }
    case ExprKind::Add:
      return checked(eval(n.args[0], env, funcs) + eval(n.args[1], env, funcs), "+");
    case ExprKind::Sub:
      return checked(eval(n.args[0], env, funcs) - eval(n.args[1], env, funcs), "-");
    case ExprKind::Mul:
      return checked(eval(n.args[0], env, funcs) * eval(n.args[1], env, funcs), "*");
    case ExprKind::Div: {
      double b = eval(n.args[1], env, funcs);
      if (b == 0.0) eval_domain_error("division by", b);
      return checked(eval(n.args[0], env, funcs) / b, "/");
    }
    case ExprKind::Pow:
      return checked(std::pow(eval(n.args[0], env, funcs), eval(n.args[1], env, funcs)), "^");
    case ExprKind::Call: {
      if (n.name == "__sgn") {
        // derivative of abs; the subgradient at 0 is fixed to 0
        double a = eval(n.args[0], env, funcs);
        return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
      }
      const FuncDef* def = funcs.find(n.name);
      if (!def) throw EvalError("unknown function: " + n.name);
      if (def->params.size() != n.args.size())
        throw EvalError("arity mismatch calling " + n.name);
      Env inner = env;
      for (size_t i = 0; i < n.args.size(); ++i)
        inner[def->params[i]] = eval(n.args[i], env, funcs);
      return eval(def->body, inner, funcs);
    }
  }
  throw EvalError("corrupt expression node");
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return e;
    case ExprKind::Symbol: {
      auto it = bindings.find(n.name);
      return it == bindings.end() ? e : it->second;
    }
    case ExprKind::Call: {
      std::vector<Expr> args;
      args.reserve(n.args.size());
      for (const auto& a : n.args) args.push_back(substitute(a, bindings));
      return Expr::call(n.name, std::move(args));
    }
    default:
      if (is_unary(n.kind)) return Expr::unary(n.kind, substitute(n.args[0], bindings));
      return Expr::binary(n.kind, substitute(n.args[0], bindings),
                          substitute(n.args[1], bindings));
  }
}

Expr inline_calls(const Expr& e, const FunctionSet& funcs) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
    case ExprKind::Symbol:
      return e;
    case ExprKind::Call: {
      if (n.name == "__sgn")
        return Expr::call("__sgn", {inline_calls(n.args[0], funcs)});
      const FuncDef* def = funcs.find(n.name);
      if (!def) throw EvalError("unknown function: " + n.name);
      if (def->params.size() != n.args.size())
        throw EvalError("arity mismatch calling " + n.name);
      std::map<std::string, Expr> bind;
      for (size_t i = 0; i < n.args.size(); ++i)
        bind.emplace(def->params[i], inline_calls(n.args[i], funcs));
      return substitute(inline_calls(def->body, funcs), bind);
    }
    default:
      if (is_unary(n.kind)) return Expr::unary(n.kind, inline_calls(n.args[0], funcs));
      return Expr::binary(n.kind, inline_calls(n.args[0], funcs),
                          inline_calls(n.args[1], funcs));
  }
}

Expr differentiate(const Expr& e, const std::string& wrt, const FunctionSet& funcs) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return Expr::constant(0.0);
    case ExprKind::Symbol:
      return Expr::constant(n.name == wrt ? 1.0 : 0.0);
    case ExprKind::Neg:
      return -differentiate(n.args[0], wrt, funcs);
    case ExprKind::Sin:
      return Expr::unary(ExprKind::Cos, n.args[0]) * differentiate(n.args[0], wrt, funcs);
    case ExprKind::Cos:
      return -(Expr::unary(ExprKind::Sin, n.args[0]) * differentiate(n.args[0], wrt, funcs));
    case ExprKind::Tanh: {
      Expr th = Expr::unary(ExprKind::Tanh, n.args[0]);
      return (Expr::constant(1.0) - th * th) * differentiate(n.args[0], wrt, funcs);
    }
    case ExprKind::Exp:
      return e * differentiate(n.args[0], wrt, funcs);
    case ExprKind::Log:
      return differentiate(n.args[0], wrt, funcs) / n.args[0];
    case ExprKind::Abs: {
      // d|u| = sgn(u) u' with sgn(0) := 0; sgn(u) = u/|u| guarded at 0 by
      // the Sgn pseudo-function below.
      return Expr::call("__sgn", {n.args[0]}) * differentiate(n.args[0], wrt, funcs);
    }
    case ExprKind::Sqrt:
      return differentiate(n.args[0], wrt, funcs) /
             (Expr::constant(2.0) * Expr::unary(ExprKind::Sqrt, n.args[0]));
    case ExprKind::Add:
      return differentiate(n.args[0], wrt, funcs) + differentiate(n.args[1], wrt, funcs);
    case ExprKind::Sub:
      return differentiate(n.args[0], wrt, funcs) - differentiate(n.args[1], wrt, funcs);
    case ExprKind::Mul:
      return differentiate(n.args[0], wrt, funcs) * n.args[1] +
             n.args[0] * differentiate(n.args[1], wrt, funcs);
    case ExprKind::Div:
      return (differentiate(n.args[0], wrt, funcs) * n.args[1] -
              n.args[0] * differentiate(n.args[1], wrt, funcs)) /
             (n.args[1] * n.args[1]);
    case ExprKind::Pow: {
      const Expr& u = n.args[0];
      const Expr& v = n.args[1];
      Expr du = differentiate(u, wrt, funcs);
      if (v.kind() == ExprKind::Constant) {
        // d(u^c) = c u^(c-1) u' -- valid for negative bases with integer c
        double c = v.node().value;
        return Expr::constant(c) * pow_expr(u, Expr::constant(c - 1.0)) * du;
      }
      Expr dv = differentiate(v, wrt, funcs);
      // u^v (v' log u + v u'/u)
      return e * (dv * Expr::unary(ExprKind::Log, u) + v * du / u);
    }
    case ExprKind::Call: {
      if (n.name == "__sgn") return Expr::constant(0.0);  // a.e. zero
      const FuncDef* def = funcs.find(n.name);
      if (!def) throw EvalError("unknown function: " + n.name);
      // chain rule over arguments: sum_i (d f/d param_i)(args) * args_i'
      Expr total = Expr::constant(0.0);
      for (size_t i = 0; i < n.args.size(); ++i) {
        Expr dbody = differentiate(def->body, def->params[i], funcs);
        std::map<std::string, Expr> bind;
        for (size_t j = 0; j < n.args.size(); ++j) bind.emplace(def->params[j], n.args[j]);
        total = std::move(total) + substitute(dbody, bind) * differentiate(n.args[i], wrt, funcs);
      }
      return total;
    }
  }
  throw EvalError("corrupt expression node");
}

namespace {

int precedence(ExprKind k) {
  switch (k) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return 1;
    case ExprKind::Mul:
    case ExprKind::Div:
      return 2;
    case ExprKind::Neg:
      return 3;
    case ExprKind::Pow:
      return 4;
    default:
      return 5;
  }
}

const char* unary_name(ExprKind k) {
  switch (k) {
    case ExprKind::Sin: return "sin";
    case ExprKind::Cos: return "cos";
    case ExprKind::Tanh: return "tanh";
    case ExprKind::Exp: return "exp";
    case ExprKind::Log: return "log";
    case ExprKind::Abs: return "abs";
    case ExprKind::Sqrt: return "sqrt";
    default: return "?";
  }
}

void format_number(std::ostream& os, double v) {
  std::ostringstream tmp;
  tmp.precision(17);
  tmp << v;
  os << tmp.str();
}

// min_prec: parenthesize if this node binds looser than the context demands.
// Printing targets exact structural round-trips, so equal-precedence children
// on the non-associative side are parenthesized.
void print_rec(std::ostream& os, const Expr& e, int min_prec) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      if (n.value < 0 && min_prec > 0) {
        os << '(';
        format_number(os, n.value);
        os << ')';
      } else {
        format_number(os, n.value);
      }
      return;
    case ExprKind::Symbol:
      os << n.name;
      return;
    case ExprKind::Neg: {
      int p = precedence(ExprKind::Neg);
      bool paren = p < min_prec;
      if (paren) os << '(';
      os << '-';
      print_rec(os, n.args[0], p + 1);
      if (paren) os << ')';
      return;
    }
    case ExprKind::Call: {
      os << n.name << '(';
      for (size_t i = 0; i < n.args.size(); ++i) {
        if (i) os << ", ";
        print_rec(os, n.args[i], 0);
      }
      os << ')';
      return;
    }
    default:
      if (is_unary(n.kind)) {
        os << unary_name(n.kind) << '(';
        print_rec(os, n.args[0], 0);
        os << ')';
        return;
      }
      break;
  }
  int p = precedence(n.kind);
  bool paren = p < min_prec;
  const char* op = nullptr;
  switch (n.kind) {
    case ExprKind::Add: op = " + "; break;
    case ExprKind::Sub: op = " - "; break;
    case ExprKind::Mul: op = "*"; break;
    case ExprKind::Div: op = "/"; break;
    case ExprKind::Pow: op = "^"; break;
    default: op = "?"; break;
  }
  if (paren) os << '(';
  if (n.kind == ExprKind::Pow) {
    // right-associative: the left child needs parens at equal precedence
    print_rec(os, n.args[0], p + 1);
    os << op;
    print_rec(os, n.args[1], p);
  } else {
    print_rec(os, n.args[0], p);
    os << op;
    print_rec(os, n.args[1], p + 1);
  }
  if (paren) os << ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_rec(os, e, 0);
  return os.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  const ExprNode& na = a.node();
  const ExprNode& nb = b.node();
  if (na.kind != nb.kind) return false;
  switch (na.kind) {
    case ExprKind::Constant:
      return na.value == nb.value;
    case ExprKind::Symbol:
      return na.name == nb.name;
    default:
      break;
  }
  if (na.kind == ExprKind::Call && na.name != nb.name) return false;
  if (na.args.size() != nb.args.size()) return false;
  for (size_t i = 0; i < na.args.size(); ++i)
    if (!structurally_equal(na.args[i], nb.args[i])) return false;
  return true;
}

namespace {

void collect_symbols(const Expr& e, std::set<std::string>& out) {
  const ExprNode& n = e.node();
  if (n.kind == ExprKind::Symbol) out.insert(n.name);
  for (const auto& a : n.args) collect_symbols(a, out);
}

void collect_calls(const Expr& e, std::set<std::string>& out) {
  const ExprNode& n = e.node();
  if (n.kind == ExprKind::Call) out.insert(n.name);
  for (const auto& a : n.args) collect_calls(a, out);
}

}  // namespace

std::vector<std::string> free_symbols(const Expr& e) {
  std::set<std::string> s;
  collect_symbols(e, s);
  return {s.begin(), s.end()};
}

std::vector<std::string> called_functions(const Expr& e) {
  std::set<std::string> s;
  collect_calls(e, s);
  return {s.begin(), s.end()};
}

}  // namespace nds
