#include "nds/compile.hpp"

#include <cmath>
#include <map>

namespace nds {

namespace {

enum class Op : std::uint8_t {
  Const,
  Load,
  Neg,
  Sin,
  Cos,
  Tanh,
  Exp,
  Log,
  Abs,
  Sqrt,
  Sgn,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

struct Instr {
  Op op;
  int a = -1, b = -1;
  double imm = 0.0;
};

struct Tape {
  std::vector<Instr> code;
  bool zero = true;  // empty tape evaluates to 0
};

class TapeBuilder {
 public:
  explicit TapeBuilder(const std::map<std::string, int>& slots) : slots_(slots) {}

  Tape build(const Expr& e) {
    Tape t;
    if (e.is_constant(0.0)) return t;
    code_.clear();
    emit(e);
    t.code = code_;
    t.zero = false;
    return t;
  }

 private:
  int emit(const Expr& e) {
    const ExprNode& n = e.node();
    Instr ins;
    switch (n.kind) {
      case ExprKind::Constant:
        ins.op = Op::Const;
        ins.imm = n.value;
        break;
      case ExprKind::Symbol: {
        auto it = slots_.find(n.name);
        if (it == slots_.end()) throw EvalError("unbound symbol: " + n.name);
        ins.op = Op::Load;
        ins.a = it->second;
        break;
      }
      case ExprKind::Call:
        if (n.name != "__sgn") throw EvalError("uninlined call: " + n.name);
        ins.op = Op::Sgn;
        ins.a = emit(n.args[0]);
        break;
      case ExprKind::Neg:  ins.op = Op::Neg;  ins.a = emit(n.args[0]); break;
      case ExprKind::Sin:  ins.op = Op::Sin;  ins.a = emit(n.args[0]); break;
      case ExprKind::Cos:  ins.op = Op::Cos;  ins.a = emit(n.args[0]); break;
      case ExprKind::Tanh: ins.op = Op::Tanh; ins.a = emit(n.args[0]); break;
      case ExprKind::Exp:  ins.op = Op::Exp;  ins.a = emit(n.args[0]); break;
      case ExprKind::Log:  ins.op = Op::Log;  ins.a = emit(n.args[0]); break;
      case ExprKind::Abs:  ins.op = Op::Abs;  ins.a = emit(n.args[0]); break;
      case ExprKind::Sqrt: ins.op = Op::Sqrt; ins.a = emit(n.args[0]); break;
      case ExprKind::Add:  ins.op = Op::Add;  ins.a = emit(n.args[0]); ins.b = emit(n.args[1]); break;
      case ExprKind::Sub:  ins.op = Op::Sub;  ins.a = emit(n.args[0]); ins.b = emit(n.args[1]); break;
      case ExprKind::Mul:  ins.op = Op::Mul;  ins.a = emit(n.args[0]); ins.b = emit(n.args[1]); break;
      case ExprKind::Div:  ins.op = Op::Div;  ins.a = emit(n.args[0]); ins.b = emit(n.args[1]); break;
      case ExprKind::Pow:  ins.op = Op::Pow;  ins.a = emit(n.args[0]); ins.b = emit(n.args[1]); break;
    }
    code_.push_back(ins);
    return static_cast<int>(code_.size()) - 1;
  }

  const std::map<std::string, int>& slots_;
  std::vector<Instr> code_;
};

double run_tape(const Tape& tape, const double* slots, std::vector<double>& regs) {
  if (tape.zero) return 0.0;
  if (regs.size() < tape.code.size()) regs.resize(tape.code.size());
  double v = 0.0;
  for (size_t i = 0; i < tape.code.size(); ++i) {
    const Instr& ins = tape.code[i];
    switch (ins.op) {
      case Op::Const: v = ins.imm; break;
      case Op::Load:  v = slots[ins.a]; break;
      case Op::Neg:   v = -regs[ins.a]; break;
      case Op::Sin:   v = std::sin(regs[ins.a]); break;
      case Op::Cos:   v = std::cos(regs[ins.a]); break;
      case Op::Tanh:  v = std::tanh(regs[ins.a]); break;
      case Op::Exp:   v = std::exp(regs[ins.a]); break;
      case Op::Log:
        if (regs[ins.a] <= 0.0) throw EvalError("domain error: log of non-positive value");
        v = std::log(regs[ins.a]);
        break;
      case Op::Abs:   v = std::abs(regs[ins.a]); break;
      case Op::Sqrt:
        if (regs[ins.a] < 0.0) throw EvalError("domain error: sqrt of negative value");
        v = std::sqrt(regs[ins.a]);
        break;
      case Op::Sgn: {
        double a = regs[ins.a];
        v = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        break;
      }
      case Op::Add: v = regs[ins.a] + regs[ins.b]; break;
      case Op::Sub: v = regs[ins.a] - regs[ins.b]; break;
      case Op::Mul: v = regs[ins.a] * regs[ins.b]; break;
      case Op::Div:
        if (regs[ins.b] == 0.0) throw EvalError("domain error: division by zero");
        v = regs[ins.a] / regs[ins.b];
        break;
      case Op::Pow: v = std::pow(regs[ins.a], regs[ins.b]); break;
    }
    regs[i] = v;
  }
  if (!std::isfinite(v)) throw EvalError("non-finite value in compiled expression");
  return v;
}

thread_local std::vector<double> tl_regs;
thread_local std::vector<double> tl_slots;

}  // namespace

struct CompiledSystem::Program {
  SystemSpec spec;
  std::vector<std::string> states;  // canonical order: fast then slow
  std::vector<std::string> param_names;
  int nf = 0, ns = 0;
  std::vector<Tape> rhs;       // n
  std::vector<Tape> jac;       // n*n, row-major (d rhs_i / d state_j)
  std::vector<Tape> dt;        // n
  bool time_varying = false;

  int n() const { return nf + ns; }
  int t_slot() const { return n(); }
  int param_slot(int i) const { return n() + 1 + i; }
};

CompiledSystem::CompiledSystem(SystemSpec s) {
  validate(s);
  auto prog = std::make_shared<Program>();
  prog->spec = std::move(s);
  const SystemSpec& spec = prog->spec;
  prog->states = spec.state_order();
  prog->nf = spec.n_fast();
  prog->ns = spec.n_slow();
  for (const auto& p : spec.params) prog->param_names.push_back(p.name);

  std::map<std::string, int> slots;
  const int n = prog->n();
  for (int i = 0; i < n; ++i) slots[prog->states[i]] = i;
  slots["t"] = prog->t_slot();
  for (size_t i = 0; i < prog->param_names.size(); ++i)
    slots[prog->param_names[i]] = prog->param_slot(static_cast<int>(i));

  FunctionSet funcs = spec.function_set();
  std::map<std::string, Expr> input_bind;
  for (const auto& in : spec.inputs) input_bind.emplace(in.name, inline_calls(in.signal, funcs));

  TapeBuilder tb(slots);
  prog->rhs.resize(n);
  prog->jac.resize(static_cast<size_t>(n) * n);
  prog->dt.resize(n);
  for (int i = 0; i < n; ++i) {
    const Expr* e = spec.equation_for(prog->states[i]);
    Expr flat = inline_calls(*e, funcs);
    if (!input_bind.empty()) flat = substitute(flat, input_bind);
    prog->rhs[i] = tb.build(flat);
    for (int j = 0; j < n; ++j)
      prog->jac[static_cast<size_t>(i) * n + j] = tb.build(differentiate(flat, prog->states[j]));
    Expr ddt = differentiate(flat, "t");
    prog->dt[i] = tb.build(ddt);
    if (!prog->dt[i].zero) prog->time_varying = true;
    for (const auto& sym : free_symbols(flat))
      if (sym == "t") prog->time_varying = true;
  }

  param_values_.reserve(spec.params.size());
  for (const auto& p : spec.params) param_values_.push_back(p.value);
  prog_ = std::move(prog);
}

CompiledSystem::CompiledSystem(std::shared_ptr<const Program> prog, std::vector<double> params)
    : prog_(std::move(prog)), param_values_(std::move(params)) {}

int CompiledSystem::dim() const { return prog_->n(); }
int CompiledSystem::n_fast() const { return prog_->nf; }
int CompiledSystem::n_slow() const { return prog_->ns; }
const std::vector<std::string>& CompiledSystem::states() const { return prog_->states; }
const SystemSpec& CompiledSystem::spec() const { return prog_->spec; }
bool CompiledSystem::time_varying() const { return prog_->time_varying; }

double CompiledSystem::param(const std::string& name) const {
  for (size_t i = 0; i < prog_->param_names.size(); ++i)
    if (prog_->param_names[i] == name) return param_values_[i];
  throw NumericError("unknown parameter: " + name);
}

bool CompiledSystem::has_param(const std::string& name) const {
  for (const auto& p : prog_->param_names)
    if (p == name) return true;
  return false;
}

double CompiledSystem::epsilon() const {
  return has_param("epsilon") ? param("epsilon") : 1.0;
}

CompiledSystem CompiledSystem::with_param(const std::string& name, double value) const {
  for (size_t i = 0; i < prog_->param_names.size(); ++i)
    if (prog_->param_names[i] == name) {
      std::vector<double> pv = param_values_;
      pv[i] = value;
      return CompiledSystem(prog_, std::move(pv));
    }
  throw NumericError("unknown parameter: " + name);
}

CompiledSystem CompiledSystem::with_epsilon(double eps) const {
  return with_param("epsilon", eps);
}

namespace {

void fill_slots(const std::vector<double>& params, const Vec& x, double t,
                std::vector<double>& slots, int n) {
  slots.resize(static_cast<size_t>(n) + 1 + params.size());
  for (int i = 0; i < n; ++i) slots[i] = x[i];
  slots[n] = t;
  for (size_t i = 0; i < params.size(); ++i) slots[n + 1 + i] = params[i];
}

}  // namespace

Vec CompiledSystem::rhs(const Vec& x, double t) const {
  const int n = prog_->n();
  fill_slots(param_values_, x, t, tl_slots, n);
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = run_tape(prog_->rhs[i], tl_slots.data(), tl_regs);
  return out;
}

Mat CompiledSystem::jacobian(const Vec& x, double t) const {
  const int n = prog_->n();
  fill_slots(param_values_, x, t, tl_slots, n);
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = run_tape(prog_->jac[static_cast<size_t>(i) * n + j], tl_slots.data(), tl_regs);
  return out;
}

Vec CompiledSystem::rhs_dt(const Vec& x, double t) const {
  const int n = prog_->n();
  fill_slots(param_values_, x, t, tl_slots, n);
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = run_tape(prog_->dt[i], tl_slots.data(), tl_regs);
  return out;
}

VectorField CompiledSystem::field() const {
  CompiledSystem copy = *this;  // shares the program
  VectorField vf;
  vf.dim = dim();
  vf.time_varying = time_varying();
  vf.f = [copy](const Vec& x, double t) { return copy.rhs(x, t); };
  vf.jac = [copy](const Vec& x, double t) { return copy.jacobian(x, t); };
  return vf;
}

Box CompiledSystem::domain_box() const {
  Box b;
  for (const auto& s : prog_->states) {
    Interval iv = prog_->spec.domain_for(s);
    b.lo.push_back(iv.lo);
    b.hi.push_back(iv.hi);
    b.labels.push_back(s);
  }
  return b;
}

}  // namespace nds
