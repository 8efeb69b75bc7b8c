#include "maptrix/qp_solver.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace maptrix;
using qp::Problem;
using qp::Status;

namespace {

Problem<double> make(Eigen::MatrixXd Q, Eigen::VectorXd c, Eigen::MatrixXd A, Eigen::VectorXd b) {
  Problem<double> p;
  p.Q = std::move(Q);
  p.c = std::move(c);
  p.A = std::move(A);
  p.b = std::move(b);
  return p;
}

double violation(const Problem<double>& p, const Eigen::VectorXd& x) {
  return p.b.size() ? std::max(0.0, (p.A * x - p.b).maxCoeff()) : 0.0;
}

}  // namespace

TEST_SUITE("qp_solver") {
  TEST_CASE("unconstrained 1-D") {
    const auto p = make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, -6.0),
                        Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
    const auto s = qp::solve(p);
    CHECK(s.status == Status::optimal);
    CHECK(s.x(0) == doctest::Approx(3.0));
  }

  TEST_CASE("active lower bound") {
    const auto p = make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(1),
                        Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::VectorXd::Constant(1, -2.0));
    const auto s = qp::solve(p);
    CHECK(s.status == Status::optimal);
    CHECK(s.x(0) == doctest::Approx(2.0));
  }

  TEST_CASE("projection onto a half-plane") {
    const Eigen::Vector2d target(1, 2), a(1, 1);
    const double b = 1.0;
    const auto p = make(2.0 * Eigen::MatrixXd::Identity(2, 2), -2.0 * target, a.transpose(), Eigen::VectorXd::Constant(1, b));
    const auto s = qp::solve(p);
    const Eigen::Vector2d expected = target - std::max(0.0, a.dot(target) - b) / a.squaredNorm() * a;
    CHECK(s.status == Status::optimal);
    CHECK((s.x - expected).norm() < 1e-9);
    CHECK(expected.isApprox(Eigen::Vector2d(0, 1)));
  }

  TEST_CASE("infeasible systems carry a certificate row") {
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;
    const auto p = make(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), A, Eigen::Vector2d(0, -1));
    const auto s = qp::solve(p);
    CHECK(s.status == Status::infeasible);
    REQUIRE(s.certificate_row.has_value());
    CHECK(*s.certificate_row < 2);
  }

  TEST_CASE("unbounded and iteration-limited runs") {
    const auto flat = make(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, -1.0), Eigen::MatrixXd(0, 1),
                           Eigen::VectorXd(0));
    CHECK(qp::solve(flat).status == Status::unbounded);

    std::mt19937_64 rng(1);
    auto rq = oracle::random_qp(12, 30, true, rng);
    const auto s = qp::solve(rq.problem, 1e-8, 1);
    CHECK((s.status == Status::max_iter || s.status == Status::optimal));
  }

  TEST_CASE("asymmetric Q is rejected") {
    Eigen::MatrixXd Q(2, 2);
    Q << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(qp::solve(make(Q, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
                    ValidationError);
  }

  TEST_CASE("strictly convex problems match dual projected gradient and satisfy KKT") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 30; ++t) {
      const int n = 2 + t % 10;
      const int m = 1 + (t * 7) % 25;
      auto rq = oracle::random_qp(n, m, true, rng);
      const auto s = qp::solve(rq.problem);
      REQUIRE(s.status == Status::optimal);
      CHECK(s.stationarity <= 1e-8 * 10);
      CHECK(violation(rq.problem, s.x) <= 1e-8 * (1.0 + rq.problem.b.cwiseAbs().maxCoeff()));
      const Eigen::VectorXd ref = oracle::dual_projected_gradient(rq.problem.Q, rq.problem.c, rq.problem.A,
                                                                  rq.problem.b, 40000);
      CHECK(std::abs(qp::objective(rq.problem, s.x) - qp::objective(rq.problem, ref)) <= 1e-5);
    }
  }

  TEST_CASE("semidefinite problems beat random feasible points") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
      auto rq = oracle::random_qp(3 + t % 8, 5 + t % 9, false, rng);
      const auto s = qp::solve(rq.problem);
      REQUIRE(s.status == Status::optimal);
      const double best = qp::objective(rq.problem, s.x);
      for (const auto& x : oracle::feasible_samples(rq.problem.A, rq.problem.b, rq.interior, 5.0, 300, rng)) {
        CHECK(best <= qp::objective(rq.problem, x) + 1e-9);
      }
    }
  }

  TEST_CASE("scaling the objective and the constraint rows keeps the argmin") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 10; ++t) {
      auto rq = oracle::random_qp(6, 12, true, rng);
      const auto base = qp::solve(rq.problem);
      for (double alpha : {0.01, 3.0, 250.0}) {
        for (double beta : {0.1, 7.0}) {
          auto p = rq.problem;
          p.Q *= alpha;
          p.c *= alpha;
          p.A *= beta;
          p.b *= beta;
          const auto s = qp::solve(p);
          REQUIRE(s.status == Status::optimal);
          CHECK((s.x - base.x).norm() <= 1e-6 * (1.0 + base.x.norm()));
        }
      }
    }
  }

  TEST_CASE("solves are deterministic") {
    std::mt19937_64 rng(5);
    auto rq = oracle::random_qp(10, 20, false, rng);
    const auto a = qp::solve(rq.problem);
    const auto b = qp::solve(rq.problem);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
  }

  TEST_CASE("paired inequalities act as an equality") {
    // min x^2 + y^2 with x + y = 2 written as two opposing rows.
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, -1, -1;
    const auto p = make(2.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), A, Eigen::Vector2d(2, -2));
    const auto s = qp::solve(p);
    CHECK(s.status == Status::optimal);
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.x(1) == doctest::Approx(1.0));
  }
}
