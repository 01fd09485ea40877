#include "nds/metric.hpp"

#include <sstream>

#include "nds/system_spec.hpp"

namespace nds {

Metric Metric::identity(int n) {
  Metric m;
  m.kind_ = Kind::Constant;
  m.n_ = n;
  m.theta_const_ = Mat::Identity(n, n);
  m.cond_const_ = 1.0;
  m.desc_ = "identity";
  return m;
}

Metric Metric::constant(Mat theta) {
  if (theta.rows() != theta.cols()) throw NumericError("metric must be square");
  Metric m;
  m.kind_ = Kind::Constant;
  m.n_ = static_cast<int>(theta.rows());
  m.cond_const_ = spectral_cond(theta);
  m.theta_const_ = std::move(theta);
  m.desc_ = "constant";
  return m;
}

Metric Metric::from_expressions(std::vector<std::vector<std::string>> entries,
                                std::vector<std::string> state_names) {
  Metric m;
  m.kind_ = Kind::Expressions;
  m.n_ = static_cast<int>(entries.size());
  m.state_names_ = std::move(state_names);
  m.exprs_.resize(m.n_);
  m.exprs_dt_.resize(m.n_);
  m.exprs_dx_.resize(m.n_);
  for (int i = 0; i < m.n_; ++i) {
    if (static_cast<int>(entries[i].size()) != m.n_)
      throw NumericError("metric expression matrix must be square");
    m.exprs_[i].resize(m.n_);
    m.exprs_dt_[i].resize(m.n_);
    m.exprs_dx_[i].resize(m.n_);
    for (int j = 0; j < m.n_; ++j) {
      Expr e = parse_expression(entries[i][j]);
      m.exprs_[i][j] = e;
      m.exprs_dt_[i][j] = differentiate(e, "t");
      m.exprs_dx_[i][j].reserve(m.state_names_.size());
      for (const auto& s : m.state_names_) m.exprs_dx_[i][j].push_back(differentiate(e, s));
    }
  }
  m.desc_ = "expressions";
  return m;
}

Metric Metric::from_callable(int n, std::function<Mat(const Vec&, double)> theta) {
  Metric m;
  m.kind_ = Kind::Callable;
  m.n_ = n;
  m.callable_ = std::move(theta);
  m.desc_ = "callable";
  return m;
}

namespace {

Env make_env(const std::vector<std::string>& names, const Vec& x, double t) {
  Env env;
  for (size_t i = 0; i < names.size(); ++i) env[names[i]] = x[static_cast<int>(i)];
  env["t"] = t;
  return env;
}

}  // namespace

Mat Metric::theta(const Vec& x, double t) const {
  switch (kind_) {
    case Kind::Constant:
      return theta_const_;
    case Kind::Expressions: {
      Env env = make_env(state_names_, x, t);
      Mat out(n_, n_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out(i, j) = eval(exprs_[i][j], env);
      return out;
    }
    case Kind::Callable:
      return callable_(x, t);
  }
  throw NumericError("corrupt metric");
}

Mat Metric::theta_dot(const Vec& x, double t, const VectorField& field) const {
  switch (kind_) {
    case Kind::Constant:
      return Mat::Zero(n_, n_);
    case Kind::Expressions: {
      Env env = make_env(state_names_, x, t);
      Vec xdot = field.f(x, t);
      Mat out(n_, n_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) {
          double v = eval(exprs_dt_[i][j], env);
          for (size_t s = 0; s < state_names_.size(); ++s)
            v += eval(exprs_dx_[i][j][s], env) * xdot[static_cast<int>(s)];
          out(i, j) = v;
        }
      return out;
    }
    case Kind::Callable: {
      const double h = 1e-6;
      Vec xdot = field.f(x, t);
      return (callable_(x + h * xdot, t + h) - callable_(x, t)) / h;
    }
  }
  throw NumericError("corrupt metric");
}

double Metric::cond(const Vec& x, double t) const {
  if (kind_ == Kind::Constant) return cond_const_;
  return spectral_cond(theta(x, t));
}

}  // namespace nds
