#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "aarc/core.hpp"

namespace aarc {

enum Capability : unsigned {
  kValue = 1u,
  kGradient = 2u,
  kHessian = 4u,
  kHessianVectorProduct = 8u,
};

using LinearOperator = std::function<Vector(const Vector &)>;

/// Smooth convex objective f: R^d -> R. Implementations are immutable after
/// construction, so a single instance may be shared between concurrent runs.
class Objective {
public:
  virtual ~Objective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual unsigned capabilities() const = 0;

  virtual double value(const Vector &x) const = 0;

  virtual double value_gradient(const Vector &, Vector &) const {
    throw CapabilityError("objective does not provide gradients");
  }

  virtual double value_gradient_hessian(const Vector &, Vector &, Matrix &) const {
    throw CapabilityError("objective does not provide Hessians");
  }

  /// Hessian at x as an operator; per-point work is done once here.
  virtual LinearOperator hessian_operator(const Vector &) const {
    throw CapabilityError("objective does not provide Hessian-vector products");
  }

  bool supports(unsigned caps) const { return (capabilities() & caps) == caps; }
};

struct Evaluation {
  double f = 0.0;
  std::optional<Vector> g;
  std::optional<Matrix> H;
};

inline Evaluation evaluate(const Objective &oracle, const Vector &x, int order) {
  require_dim(x, oracle.dimension(), "evaluate");
  if (order < 0 || order > 2)
    throw Error("evaluate: order must be 0, 1 or 2");
  static constexpr unsigned needed[] = {kValue, kValue | kGradient, kValue | kGradient | kHessian};
  if (!oracle.supports(needed[order]))
    throw CapabilityError("evaluate: order " + std::to_string(order) + " not supported");

  Evaluation out;
  if (order == 0) {
    out.f = oracle.value(x);
  } else if (order == 1) {
    Vector g;
    out.f = oracle.value_gradient(x, g);
    out.g = std::move(g);
  } else {
    Vector g;
    Matrix H;
    out.f = oracle.value_gradient_hessian(x, g, H);
    out.g = std::move(g);
    out.H = std::move(H);
  }
  if (!std::isfinite(out.f) || (out.g && !out.g->allFinite()) || (out.H && !out.H->allFinite()))
    throw NonFiniteError("evaluate: objective returned a non-finite result");
  return out;
}

/// ln(1 + e^t) without overflow for large |t|.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double logistic_sigmoid(double t) {
  if (t >= 0.0)
    return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

struct Dataset {
  Matrix samples;  // n x d, one row per sample
  Vector labels;   // entries in {-1, +1}
  Eigen::Index n() const { return samples.rows(); }
  Eigen::Index d() const { return samples.cols(); }
};

/// f(x) = (1/n) sum ln(1 + exp(-b_i a_i^T x)) + (lambda/2) |x|^2
class LogisticObjective final : public Objective {
public:
  LogisticObjective(Dataset data, double lambda) : data_(std::move(data)), lambda_(lambda) {
    if (data_.n() == 0 || data_.d() == 0)
      throw DimensionError("logistic objective: empty dataset");
    if (data_.labels.size() != data_.n())
      throw DimensionError("logistic objective: label count does not match sample count");
    if (lambda_ < 0.0)
      throw Error("logistic objective: lambda must be non-negative");
  }

  Eigen::Index dimension() const override { return data_.d(); }
  unsigned capabilities() const override {
    return kValue | kGradient | kHessian | kHessianVectorProduct;
  }
  double lambda() const { return lambda_; }
  const Dataset &data() const { return data_; }

  double value(const Vector &x) const override {
    const Vector t = margins(x);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i)
      sum += softplus(t[i]);
    return sum / double(data_.n()) + 0.5 * lambda_ * x.squaredNorm();
  }

  double value_gradient(const Vector &x, Vector &g) const override {
    Vector t = margins(x);
    double sum = 0.0;
    Vector coef(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      sum += softplus(t[i]);
      coef[i] = -data_.labels[i] * logistic_sigmoid(t[i]);
    }
    const double inv_n = 1.0 / double(data_.n());
    g = inv_n * (data_.samples.transpose() * coef) + lambda_ * x;
    return sum * inv_n + 0.5 * lambda_ * x.squaredNorm();
  }

  double value_gradient_hessian(const Vector &x, Vector &g, Matrix &H) const override {
    Vector t = margins(x);
    double sum = 0.0;
    Vector coef(t.size());
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double p = logistic_sigmoid(t[i]);
      sum += softplus(t[i]);
      coef[i] = -data_.labels[i] * p;
      w[i] = p * logistic_sigmoid(-t[i]);
    }
    const double inv_n = 1.0 / double(data_.n());
    g = inv_n * (data_.samples.transpose() * coef) + lambda_ * x;
    H = inv_n * (data_.samples.transpose() * w.asDiagonal() * data_.samples);
    H.diagonal().array() += lambda_;
    return sum * inv_n + 0.5 * lambda_ * x.squaredNorm();
  }

  LinearOperator hessian_operator(const Vector &x) const override {
    const Vector t = margins(x);
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      w[i] = logistic_sigmoid(t[i]) * logistic_sigmoid(-t[i]) / double(data_.n());
    return [this, w = std::move(w)](const Vector &v) -> Vector {
      const Vector Av = data_.samples * v;
      return data_.samples.transpose() * w.cwiseProduct(Av) + lambda_ * v;
    };
  }

private:
  Vector margins(const Vector &x) const {
    require_dim(x, data_.d(), "logistic objective");
    return -(data_.labels.array() * (data_.samples * x).array()).matrix();
  }

  Dataset data_;
  double lambda_;
};

inline std::shared_ptr<const Objective> make_logistic(Dataset dataset, double lambda) {
  return std::make_shared<LogisticObjective>(std::move(dataset), lambda);
}

/// Known constants of a synthetic instance.
struct TestFunctionMeta {
  double known_Lg = 0.0;
  double known_Lh = 0.0;
  double known_mu = 0.0;
  std::optional<double> known_fstar;
  std::optional<Vector> known_xstar;
};

/// f(x) = 1/2 x^T A x - b^T x
class QuadraticObjective final : public Objective {
public:
  QuadraticObjective(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != A_.cols() || A_.rows() != b_.size())
      throw DimensionError("quadratic objective: A must be square and match b");
  }

  Eigen::Index dimension() const override { return b_.size(); }
  unsigned capabilities() const override {
    return kValue | kGradient | kHessian | kHessianVectorProduct;
  }
  const Matrix &A() const { return A_; }
  const Vector &b() const { return b_; }

  double value(const Vector &x) const override {
    require_dim(x, dimension(), "quadratic objective");
    return 0.5 * x.dot(A_ * x) - b_.dot(x);
  }
  double value_gradient(const Vector &x, Vector &g) const override {
    require_dim(x, dimension(), "quadratic objective");
    const Vector Ax = A_ * x;
    g = Ax - b_;
    return 0.5 * x.dot(Ax) - b_.dot(x);
  }
  double value_gradient_hessian(const Vector &x, Vector &g, Matrix &H) const override {
    H = A_;
    return value_gradient(x, g);
  }
  LinearOperator hessian_operator(const Vector &) const override {
    return [this](const Vector &v) -> Vector { return A_ * v; };
  }

private:
  Matrix A_;
  Vector b_;
};

/// f(x) = ln( sum_i e^{x_i - c_i} + e^{c_i - x_i} ) - ln(2d); minimized at x = c with f* = 0.
class LogSumExpObjective final : public Objective {
public:
  explicit LogSumExpObjective(Vector center) : c_(std::move(center)) {
    if (c_.size() == 0)
      throw DimensionError("log-sum-exp objective: empty center");
  }

  Eigen::Index dimension() const override { return c_.size(); }
  unsigned capabilities() const override {
    return kValue | kGradient | kHessian | kHessianVectorProduct;
  }

  double value(const Vector &x) const override {
    Vector pp, pm;
    return weights(x, pp, pm);
  }
  double value_gradient(const Vector &x, Vector &g) const override {
    Vector pp, pm;
    const double f = weights(x, pp, pm);
    g = pp - pm;
    return f;
  }
  double value_gradient_hessian(const Vector &x, Vector &g, Matrix &H) const override {
    Vector pp, pm;
    const double f = weights(x, pp, pm);
    g = pp - pm;
    H = Matrix((pp + pm).asDiagonal()) - g * g.transpose();
    return f;
  }
  LinearOperator hessian_operator(const Vector &x) const override {
    Vector pp, pm;
    weights(x, pp, pm);
    Vector diag = pp + pm;
    Vector g = pp - pm;
    return [diag = std::move(diag), g = std::move(g)](const Vector &v) -> Vector {
      return diag.cwiseProduct(v) - g * g.dot(v);
    };
  }

private:
  double weights(const Vector &x, Vector &pp, Vector &pm) const {
    require_dim(x, dimension(), "log-sum-exp objective");
    const Vector u = x - c_;
    const double m = u.cwiseAbs().maxCoeff();
    pp = (u.array() - m).exp().matrix();
    pm = (-u.array() - m).exp().matrix();
    const double s = pp.sum() + pm.sum();
    pp /= s;
    pm /= s;
    return m + std::log(s) - std::log(2.0 * double(c_.size()));
  }

  Vector c_;
};

/// f(x) = sum_i x_i^4 / 12
class SeparableQuarticObjective final : public Objective {
public:
  explicit SeparableQuarticObjective(Eigen::Index d) : d_(d) {
    if (d <= 0)
      throw DimensionError("quartic objective: dimension must be positive");
  }

  Eigen::Index dimension() const override { return d_; }
  unsigned capabilities() const override {
    return kValue | kGradient | kHessian | kHessianVectorProduct;
  }

  double value(const Vector &x) const override {
    require_dim(x, d_, "quartic objective");
    return x.array().pow(4).sum() / 12.0;
  }
  double value_gradient(const Vector &x, Vector &g) const override {
    const double f = value(x);
    g = x.array().cube().matrix() / 3.0;
    return f;
  }
  double value_gradient_hessian(const Vector &x, Vector &g, Matrix &H) const override {
    const double f = value_gradient(x, g);
    H = Matrix(x.array().square().matrix().asDiagonal());
    return f;
  }
  LinearOperator hessian_operator(const Vector &x) const override {
    require_dim(x, d_, "quartic objective");
    Vector diag = x.array().square().matrix();
    return [diag = std::move(diag)](const Vector &v) -> Vector { return diag.cwiseProduct(v); };
  }

private:
  Eigen::Index d_;
};

enum class SyntheticKind { quadratic, log_sum_exp, separable_convex_quartic };

struct SyntheticParams {
  Eigen::Index dimension = 0;
  Matrix A;             // quadratic
  Vector b;             // quadratic
  Vector center;        // log_sum_exp; zero when empty
  double box_radius = 1.0;  // separable_convex_quartic: constants hold on |x|_inf <= box_radius
};

struct SyntheticInstance {
  std::shared_ptr<const Objective> oracle;
  TestFunctionMeta meta;
};

inline SyntheticInstance make_synthetic(SyntheticKind kind, const SyntheticParams &p) {
  SyntheticInstance out;
  switch (kind) {
  case SyntheticKind::quadratic: {
    if (p.A.rows() != p.A.cols() || p.A.rows() != p.b.size() || p.A.rows() == 0)
      throw DimensionError("quadratic: A must be square, non-empty and match b");
    const double scale = 1.0 + p.A.cwiseAbs().maxCoeff();
    if ((p.A - p.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw Error("quadratic: A is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(p.A);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (lmin < -1e-12 * scale)
      throw Error("quadratic: A is not positive semidefinite");
    out.meta.known_Lg = std::max(lmax, 0.0);
    out.meta.known_Lh = 0.0;
    out.meta.known_mu = std::max(lmin, 0.0);
    if (lmin > 0.0) {
      Vector xs = p.A.ldlt().solve(p.b);
      out.meta.known_fstar = -0.5 * p.b.dot(xs);
      out.meta.known_xstar = std::move(xs);
    }
    out.oracle = std::make_shared<QuadraticObjective>(p.A, p.b);
    break;
  }
  case SyntheticKind::log_sum_exp: {
    Vector c = p.center.size() ? p.center : Vector::Zero(p.dimension);
    out.meta.known_Lg = 1.0;
    out.meta.known_Lh = 1.0;
    out.meta.known_mu = 0.0;
    out.meta.known_fstar = 0.0;
    out.meta.known_xstar = c;
    out.oracle = std::make_shared<LogSumExpObjective>(std::move(c));
    break;
  }
  case SyntheticKind::separable_convex_quartic: {
    const double R = p.box_radius;
    out.meta.known_Lg = R * R;
    out.meta.known_Lh = 2.0 * R;
    out.meta.known_mu = 0.0;
    out.meta.known_fstar = 0.0;
    out.meta.known_xstar = Vector::Zero(p.dimension);
    out.oracle = std::make_shared<SeparableQuarticObjective>(p.dimension);
    break;
  }
  }
  return out;
}

/// Oracle-call bookkeeping shared by every solver.
struct OracleCalls {
  std::int64_t values = 0;
  std::int64_t gradients = 0;
  std::int64_t hvps = 0;
  std::int64_t fd_gradients = 0;
};

/// Non-owning view that counts calls and validates results.
class CountingOracle {
public:
  explicit CountingOracle(const Objective &f) : f_(f) {}

  const Objective &objective() const { return f_; }
  Eigen::Index dimension() const { return f_.dimension(); }
  const OracleCalls &calls() const { return calls_; }

  double value(const Vector &x) {
    ++calls_.values;
    const double v = f_.value(x);
    if (!std::isfinite(v))
      throw NonFiniteError("objective value is not finite");
    return v;
  }

  double value_gradient(const Vector &x, Vector &g) {
    ++calls_.values;
    ++calls_.gradients;
    const double v = f_.value_gradient(x, g);
    if (!std::isfinite(v) || !g.allFinite())
      throw NonFiniteError("objective value or gradient is not finite");
    return v;
  }

  Vector fd_gradient(const Vector &x) {
    ++calls_.fd_gradients;
    Vector g;
    f_.value_gradient(x, g);
    if (!g.allFinite())
      throw NonFiniteError("gradient at a difference probe is not finite");
    return g;
  }

  LinearOperator hessian_operator(const Vector &x) {
    auto op = f_.hessian_operator(x);
    return [this, op = std::move(op)](const Vector &v) -> Vector {
      ++calls_.hvps;
      return op(v);
    };
  }

private:
  const Objective &f_;
  OracleCalls calls_;
};

} // namespace aarc
