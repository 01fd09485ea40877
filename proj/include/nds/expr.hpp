#pragma once

// Symbolic expression trees: evaluation, exact differentiation, printing.
// Nodes are immutable and shared; Expr is a cheap value handle.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nds {

enum class ExprKind : std::uint8_t {
  Constant,
  Symbol,
  // unary
  Neg,
  Sin,
  Cos,
  Tanh,
  Exp,
  Log,
  Abs,
  Sqrt,
  // binary
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  // user function application
  Call,
};

bool is_unary(ExprKind k);
bool is_binary(ExprKind k);

class Expr;
struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind;
  double value = 0.0;      // Constant
  std::string name;        // Symbol, Call
  std::vector<Expr> args;  // operands
};

/// Thrown when evaluation hits an unbound symbol or a non-finite result.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Expr {
 public:
  Expr() = default;

  static Expr constant(double v);
  static Expr symbol(std::string name);
  static Expr unary(ExprKind k, Expr a);
  static Expr binary(ExprKind k, Expr a, Expr b);
  static Expr call(std::string fn, std::vector<Expr> args);

  bool valid() const { return node_ != nullptr; }
  const ExprNode& node() const { return *node_; }
  ExprKind kind() const { return node_->kind; }

  bool is_constant(double v) const;

 private:
  explicit Expr(ExprNodePtr n) : node_(std::move(n)) {}
  ExprNodePtr node_;
};

// convenience builders with constant folding and 0/1 identities
Expr operator-(Expr a);
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr pow_expr(Expr base, Expr exponent);

struct FuncDef {
  std::string name;
  std::vector<std::string> params;
  Expr body;
};

/// Named user functions available to eval/differentiate.
class FunctionSet {
 public:
  FunctionSet() = default;
  explicit FunctionSet(const std::vector<FuncDef>& defs);
  void add(FuncDef def);
  const FuncDef* find(const std::string& name) const;
  bool empty() const { return defs_.empty(); }

 private:
  std::map<std::string, FuncDef> defs_;
};

using Env = std::map<std::string, double>;

/// Evaluate with all free symbols bound. Throws EvalError on unbound symbols
/// and on domain errors (non-finite results are reported, never returned).
double eval(const Expr& e, const Env& env, const FunctionSet& funcs = {});

/// Exact symbolic derivative. abs'(0) is taken as 0.
Expr differentiate(const Expr& e, const std::string& wrt, const FunctionSet& funcs = {});

/// Replace every occurrence of a symbol by an expression.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& bindings);

/// Inline all user-function applications (bodies substituted, recursively).
Expr inline_calls(const Expr& e, const FunctionSet& funcs);

std::string to_string(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// All symbol names appearing in the tree (sorted, unique).
std::vector<std::string> free_symbols(const Expr& e);

/// All user-function names applied in the tree (sorted, unique).
std::vector<std::string> called_functions(const Expr& e);

}  // namespace nds
