#pragma once

// Dense convex quadratic programs:
//
//   minimize   1/2 x'Qx + c'x
//   subject to A x <= b
//
// with Q symmetric positive semidefinite. Primal active-set method with a
// phase-1 linear program when the start point is infeasible. When Q is
// positive definite the equality-constrained subproblems are solved in range
// space through a Cholesky factor of Q; otherwise a null-space method handles
// the singular directions.

#include "maptrix/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace maptrix::qp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
struct Problem {
  Matrix<Scalar> Q;
  Vector<Scalar> c;
  Matrix<Scalar> A;
  Vector<Scalar> b;
  /// Optional start; an empty vector means the origin.
  Vector<Scalar> x0;

  Eigen::Index variables() const { return c.size(); }
  Eigen::Index constraints() const { return b.size(); }
};

enum class Status { optimal, max_iter, infeasible, unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::max_iter: return "max_iter";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

template <typename Scalar = double>
struct Solution {
  Vector<Scalar> x;
  /// One multiplier per constraint row; zero for rows outside the final working set.
  Vector<Scalar> lambda;
  Status status = Status::max_iter;
  int iterations = 0;
  Scalar objective = Scalar(0);
  /// max |Qx + c + A'lambda|
  Scalar stationarity = Scalar(0);
  /// max(A x - b), clipped at zero
  Scalar max_violation = Scalar(0);
  /// For infeasible problems: the row most violated at the phase-1 optimum.
  std::optional<Eigen::Index> certificate_row;
  std::vector<Eigen::Index> active_set;
};

template <typename Scalar>
Scalar objective(const Problem<Scalar>& p, const Vector<Scalar>& x) {
  return Scalar(0.5) * x.dot(p.Q * x) + p.c.dot(x);
}

template <typename Scalar>
void validate(const Problem<Scalar>& p) {
  const Eigen::Index n = p.c.size();
  if (p.Q.rows() != n || p.Q.cols() != n) throw ValidationError("QP: Q must be n x n with n = size(c)");
  if (p.A.cols() != n && p.A.rows() > 0) throw ValidationError("QP: A must have n columns");
  if (p.A.rows() != p.b.size()) throw ValidationError("QP: A and b row counts differ");
  if (p.x0.size() != 0 && p.x0.size() != n) throw ValidationError("QP: x0 has the wrong size");
  const Scalar scale = std::max(Scalar(1), n ? p.Q.cwiseAbs().maxCoeff() : Scalar(1));
  if (n && (p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
    throw ValidationError("QP: Q is not symmetric");
  }
}

namespace detail {

template <typename Scalar>
struct Step {
  Vector<Scalar> p;
  Vector<Scalar> mu;  // multipliers of the working set (valid when p ~ 0)
  bool ray = false;   // p is a zero-curvature descent direction
};

/// Range-space subproblem solver for positive definite Q.
template <typename Scalar>
class RangeSpace {
 public:
  RangeSpace(const Matrix<Scalar>& Q, const Matrix<Scalar>& A) : llt_(Q), A_(A), cols_(A.rows()), have_(A.rows(), false) {}

  bool ok() const {
    if (llt_.info() != Eigen::Success) return false;
    const auto d = llt_.matrixLLT().diagonal();
    if (d.size() == 0) return true;
    return d.minCoeff() > std::sqrt(std::numeric_limits<Scalar>::epsilon()) * d.maxCoeff();
  }

  Step<Scalar> solve(const Vector<Scalar>& g, const std::vector<Eigen::Index>& W) {
    const Eigen::Index n = g.size();
    const Eigen::Index w = static_cast<Eigen::Index>(W.size());
    const auto L = llt_.matrixL();
    Vector<Scalar> h = L.solve(g);
    Matrix<Scalar> Y(n, w);
    for (Eigen::Index j = 0; j < w; ++j) Y.col(j) = column(W[static_cast<std::size_t>(j)]);
    Step<Scalar> step;
    if (w > 0) {
      const Matrix<Scalar> S = Y.transpose() * Y;
      step.mu = S.ldlt().solve(-(Y.transpose() * h));
      h += Y * step.mu;
    } else {
      step.mu.resize(0);
    }
    step.p = -(llt_.matrixU().solve(h));
    return step;
  }

 private:
  const Vector<Scalar>& column(Eigen::Index row) {
    if (!have_[static_cast<std::size_t>(row)]) {
      cols_[static_cast<std::size_t>(row)] = llt_.matrixL().solve(A_.row(row).transpose());
      have_[static_cast<std::size_t>(row)] = true;
    }
    return cols_[static_cast<std::size_t>(row)];
  }

  Eigen::LLT<Matrix<Scalar>> llt_;
  const Matrix<Scalar>& A_;
  std::vector<Vector<Scalar>> cols_;
  std::vector<bool> have_;
};

/// Null-space subproblem solver; handles singular Q.
template <typename Scalar>
class NullSpace {
 public:
  NullSpace(const Matrix<Scalar>& Q, const Matrix<Scalar>& A) : Q_(Q), A_(A) {}

  Step<Scalar> solve(const Vector<Scalar>& g, const std::vector<Eigen::Index>& W) {
    const Eigen::Index n = g.size();
    const Eigen::Index w = static_cast<Eigen::Index>(W.size());
    Matrix<Scalar> AwT(n, w);
    for (Eigen::Index j = 0; j < w; ++j) AwT.col(j) = A_.row(W[static_cast<std::size_t>(j)]).transpose();

    Matrix<Scalar> Z;
    Eigen::HouseholderQR<Matrix<Scalar>> qr;
    if (w > 0) {
      qr.compute(AwT);
      const Matrix<Scalar> full = qr.householderQ() * Matrix<Scalar>::Identity(n, n);
      Z = full.rightCols(n - w);
    } else {
      Z = Matrix<Scalar>::Identity(n, n);
    }

    Step<Scalar> step;
    step.p = Vector<Scalar>::Zero(n);
    if (Z.cols() > 0) {
      const Matrix<Scalar> H = Z.transpose() * Q_ * Z;
      const Vector<Scalar> r = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(H);
      const Vector<Scalar>& ev = eig.eigenvalues();
      const Matrix<Scalar>& V = eig.eigenvectors();
      const Vector<Scalar> rt = V.transpose() * r;
      const Scalar ev_scale = std::max(Scalar(1), ev.cwiseAbs().maxCoeff());
      const Scalar flat = Scalar(1e-10) * ev_scale;
      const Scalar g_scale = std::max(Scalar(1), g.cwiseAbs().maxCoeff());
      Vector<Scalar> u = Vector<Scalar>::Zero(ev.size());
      Vector<Scalar> ray = Vector<Scalar>::Zero(ev.size());
      bool has_ray = false;
      for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > flat) {
          u(i) = -rt(i) / ev(i);
        } else if (std::abs(rt(i)) > Scalar(1e-11) * g_scale) {
          ray(i) = -rt(i);
          has_ray = true;
        }
      }
      if (has_ray) {
        step.p = Z * (V * ray);
        step.ray = true;
      } else {
        step.p = Z * (V * u);
      }
    }
    if (w > 0) {
      // A_W' mu = -(g + Q p), least squares through the QR factor.
      const Vector<Scalar> rhs = -(g + Q_ * step.p);
      step.mu = qr.solve(rhs);
    } else {
      step.mu.resize(0);
    }
    return step;
  }

 private:
  const Matrix<Scalar>& Q_;
  const Matrix<Scalar>& A_;
};

template <typename Scalar>
struct EngineResult {
  Status status = Status::max_iter;
  int iterations = 0;
  std::vector<Eigen::Index> W;
  Vector<Scalar> mu;
};

/// Primal active-set iterations from a feasible x.
template <typename Scalar, typename Sub>
EngineResult<Scalar> run_active_set(Sub& sub, const Matrix<Scalar>& Q, const Vector<Scalar>& c,
                                    const Matrix<Scalar>& A, const Vector<Scalar>& b, Vector<Scalar>& x,
                                    std::vector<Eigen::Index> W, Scalar tol, int max_iter) {
  const Eigen::Index m = b.size();
  EngineResult<Scalar> out;
  std::vector<bool> in_w(static_cast<std::size_t>(m), false);
  for (auto i : W) in_w[static_cast<std::size_t>(i)] = true;
  Vector<Scalar> row_norm(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm(i) = A.row(i).norm();

  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const Vector<Scalar> g = Q * x + c;
    Step<Scalar> step = sub.solve(g, W);
    const Scalar p_norm = step.p.cwiseAbs().maxCoeff();
    const Scalar x_scale = Scalar(1) + (x.size() ? x.cwiseAbs().maxCoeff() : Scalar(0));
    if (!step.ray && !(p_norm > Scalar(1e-2) * tol * x_scale)) {
      if (W.empty()) {
        out.status = Status::optimal;
        out.W = W;
        out.mu = step.mu;
        return out;
      }
      Eigen::Index drop = 0;
      const Scalar most_negative = step.mu.minCoeff(&drop);
      const Scalar g_scale = Scalar(1) + g.cwiseAbs().maxCoeff();
      if (most_negative >= -tol * g_scale) {
        out.status = Status::optimal;
        out.W = W;
        out.mu = step.mu;
        return out;
      }
      in_w[static_cast<std::size_t>(W[static_cast<std::size_t>(drop)])] = false;
      W.erase(W.begin() + drop);
      continue;
    }

    Scalar alpha = step.ray ? std::numeric_limits<Scalar>::infinity() : Scalar(1);
    Eigen::Index blocking = -1;
    const Scalar direction_floor = Scalar(1e-12) * step.p.norm();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_w[static_cast<std::size_t>(i)]) continue;
      const Scalar ap = A.row(i).dot(step.p);
      if (!(ap > direction_floor * row_norm(i))) continue;
      const Scalar slack = std::max(Scalar(0), b(i) - A.row(i).dot(x));
      const Scalar ratio = slack / ap;
      if (ratio < alpha) {
        alpha = ratio;
        blocking = i;
      }
    }
    if (step.ray && blocking < 0) {
      out.status = Status::unbounded;
      out.W = W;
      return out;
    }
    x += alpha * step.p;
    if (blocking >= 0) {
      W.push_back(blocking);
      in_w[static_cast<std::size_t>(blocking)] = true;
    }
  }
  out.status = Status::max_iter;
  out.W = W;
  out.mu = Vector<Scalar>::Zero(static_cast<Eigen::Index>(W.size()));
  return out;
}

template <typename Scalar>
Scalar row_tolerance(const Vector<Scalar>& b, Eigen::Index i, Scalar tol) {
  return tol * (Scalar(1) + std::abs(b(i)));
}

/// Rows active at x that pair up as exact opposites (a'x <= b and -a'x <= -b)
/// encode equalities; one row of each pair seeds the working set.
template <typename Scalar>
std::vector<Eigen::Index> equality_seed(const Matrix<Scalar>& A, const Vector<Scalar>& b, const Vector<Scalar>& x,
                                        Scalar tol) {
  std::vector<Eigen::Index> seed;
  const Eigen::Index m = b.size();
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (used[static_cast<std::size_t>(i)]) continue;
    if (std::abs(A.row(i).dot(x) - b(i)) > row_tolerance(b, i, tol)) continue;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      if (b(j) == -b(i) && (A.row(j) + A.row(i)).cwiseAbs().maxCoeff() == Scalar(0)) {
        seed.push_back(i);
        used[static_cast<std::size_t>(i)] = used[static_cast<std::size_t>(j)] = true;
        break;
      }
    }
  }
  return seed;
}

}  // namespace detail

/// Solves the problem; `max_iter <= 0` selects 10 * (n + m).
template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar>& problem, Scalar tol = Scalar(1e-8), int max_iter = 0) {
  validate(problem);
  if (!(tol > Scalar(0))) throw ValidationError("QP: tol must be > 0");
  const Eigen::Index n = problem.variables();
  const Eigen::Index m = problem.constraints();
  if (max_iter <= 0) max_iter = static_cast<int>(10 * (n + m));
  const Matrix<Scalar> A = m > 0 ? problem.A : Matrix<Scalar>(0, n);

  Solution<Scalar> sol;
  Vector<Scalar> x = problem.x0.size() == n ? problem.x0 : Vector<Scalar>::Zero(n);
  sol.lambda = Vector<Scalar>::Zero(m);

  auto violation_of = [&](const Vector<Scalar>& v, Eigen::Index* worst) {
    Scalar vmax = Scalar(0);
    bool any = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Scalar excess = A.row(i).dot(v) - problem.b(i);
      if (excess > detail::row_tolerance(problem.b, i, tol) && (!any || excess > vmax)) {
        vmax = excess;
        any = true;
        if (worst) *worst = i;
      }
    }
    return any ? vmax : Scalar(0);
  };

  int phase1_iterations = 0;
  if (violation_of(x, nullptr) > Scalar(0)) {
    // Phase 1: minimise t subject to A x - t <= b, t >= 0, from (x, max violation).
    Matrix<Scalar> A1 = Matrix<Scalar>::Zero(m + 1, n + 1);
    A1.topLeftCorner(m, n) = A;
    A1.col(n).head(m).setConstant(Scalar(-1));
    A1(m, n) = Scalar(-1);
    Vector<Scalar> b1(m + 1);
    b1.head(m) = problem.b;
    b1(m) = Scalar(0);
    Vector<Scalar> x1(n + 1);
    x1.head(n) = x;
    x1(n) = m > 0 ? std::max(Scalar(0), (A * x - problem.b).maxCoeff()) : Scalar(0);
    const Matrix<Scalar> Q1 = Matrix<Scalar>::Zero(n + 1, n + 1);
    Vector<Scalar> c1 = Vector<Scalar>::Zero(n + 1);
    c1(n) = Scalar(1);
    detail::NullSpace<Scalar> sub(Q1, A1);
    auto res = detail::run_active_set<Scalar>(sub, Q1, c1, A1, b1, x1, {}, tol, 10 * static_cast<int>(n + m + 2));
    phase1_iterations = res.iterations;
    x = x1.head(n);
    Eigen::Index worst = 0;
    if (violation_of(x, &worst) > Scalar(0)) {
      sol.x = x;
      sol.status = Status::infeasible;
      sol.certificate_row = worst;
      sol.iterations = phase1_iterations;
      sol.objective = objective(problem, x);
      sol.max_violation = violation_of(x, nullptr);
      return sol;
    }
  }

  std::vector<Eigen::Index> seed = detail::equality_seed<Scalar>(A, problem.b, x, tol);
  detail::EngineResult<Scalar> res;
  detail::RangeSpace<Scalar> range(problem.Q, A);
  if (range.ok()) {
    res = detail::run_active_set<Scalar>(range, problem.Q, problem.c, A, problem.b, x, seed, tol, max_iter);
  } else {
    detail::NullSpace<Scalar> null(problem.Q, A);
    res = detail::run_active_set<Scalar>(null, problem.Q, problem.c, A, problem.b, x, seed, tol, max_iter);
  }

  sol.x = x;
  sol.status = res.status;
  sol.iterations = phase1_iterations + res.iterations;
  sol.active_set = res.W;
  for (std::size_t j = 0; j < res.W.size() && static_cast<Eigen::Index>(j) < res.mu.size(); ++j) {
    sol.lambda(res.W[j]) = res.mu(static_cast<Eigen::Index>(j));
  }
  sol.objective = objective(problem, x);
  const Vector<Scalar> residual = problem.Q * x + problem.c + A.transpose() * sol.lambda;
  sol.stationarity = n ? residual.cwiseAbs().maxCoeff() : Scalar(0);
  sol.max_violation = m ? std::max(Scalar(0), (A * x - problem.b).maxCoeff()) : Scalar(0);
  return sol;
}

}  // namespace maptrix::qp
