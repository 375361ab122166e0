#include <doctest.h>

#include <cmath>
#include <random>

#include "gibbs_ot/datasets.hpp"
#include "gibbs_ot/errors.hpp"
#include "gibbs_ot/ot_core.hpp"
#include "oracles.hpp"

using namespace gibbs_ot;

namespace {

Matrix mat(std::size_t r, std::size_t c, std::vector<double> d) { return Matrix(r, c, std::move(d)); }

void check_exact_contract(const std::vector<double>& p, const std::vector<double>& q, const Matrix& M,
                          const ExactSolution& sol) {
  const auto [rp, rq] = marginal_residual(sol.plan, p, q);
  CHECK(rp <= 1e-9);
  CHECK(rq <= 1e-9);
  for (const auto& e : sol.plan.to_triples()) CHECK(e.mass >= 0.0);
  // strong duality and feasibility
  CHECK(std::abs(oracle::dot(p, sol.dual_g) - oracle::dot(q, sol.dual_h) - sol.cost) <= 1e-9);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) CHECK(sol.dual_g[i] - sol.dual_h[j] <= M(i, j) + 1e-9);
  // complementary slackness
  for (const auto& e : sol.plan.to_triples())
    if (e.mass > 1e-12) CHECK(std::abs(sol.dual_g[e.row] - sol.dual_h[e.col] - M(e.row, e.col)) <= 1e-9);
  CHECK(std::abs(transport_cost(sol.plan, M) - sol.cost) <= 1e-12);
}

}  // namespace

TEST_CASE("make_measure normalizes and floors") {
  CHECK(make_measure(std::vector<double>{2, 2}).weights == std::vector<double>{0.5, 0.5});
  CHECK(make_measure(std::vector<double>{1}).weights == std::vector<double>{1.0});

  const auto m = make_measure(std::vector<double>{0, 1});
  const double expect0 = 1e-9 / (1.0 + 1e-9);
  CHECK(m.weights[0] == doctest::Approx(expect0).epsilon(1e-12));
  CHECK(m.weights[1] == doctest::Approx(1.0 / (1.0 + 1e-9)).epsilon(1e-15));
  CHECK(std::abs(m.weights[0] + m.weights[1] - 1.0) <= 1e-12);
}

TEST_CASE("make_measure rejects bad input") {
  CHECK_THROWS_AS(make_measure(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(std::vector<double>{1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(std::vector<double>{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(std::vector<double>{1, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(std::vector<double>{1, 1}, std::vector<Point>{{0.0}}), std::invalid_argument);
}

TEST_CASE("make_measure keeps the simplex on random input") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> w(1 + t % 9);
    for (auto& x : w) x = (t % 3 == 0) ? 0.0 : u(rng);
    w[0] = 1.0;
    const auto m = make_measure(w);
    double s = 0.0;
    for (double x : m.weights) {
      CHECK(x >= kWeightFloor * 0.999);
      s += x;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("euclidean_cost examples") {
  std::vector<Point> a{{0.0}}, b{{0.0}};
  CHECK(euclidean_cost(a, b, 2.0).entries == mat(1, 1, {0.0}));
  std::vector<Point> xs{{0.0}, {1.0}};
  CHECK(euclidean_cost(xs, xs, 1.0).entries == mat(2, 2, {0, 1, 1, 0}));
  std::vector<Point> half{{0.5}};
  CHECK(euclidean_cost(xs, half, 2.0).entries == mat(2, 1, {0.25, 0.25}));
  std::vector<Point> two_d{{0.0, 0.0}};
  CHECK_THROWS_AS(euclidean_cost(xs, two_d, 2.0), std::invalid_argument);
  std::vector<Point> p3{{0.0, 0.0}}, q3{{3.0, 4.0}};
  CHECK(euclidean_cost(p3, q3, 1.0)(0, 0) == doctest::Approx(5.0));
  CHECK(euclidean_cost(p3, q3, 2.0)(0, 0) == 25.0);
}

TEST_CASE("coulomb_cost examples and properties") {
  CHECK(coulomb_cost(std::vector<double>{0}, std::vector<double>{1}, 100).entries == mat(1, 1, {1.0}));
  CHECK(coulomb_cost(std::vector<double>{0}, std::vector<double>{0}, 100).entries == mat(1, 1, {100.0}));
  CHECK(coulomb_cost(std::vector<double>{0, 0.5}, std::vector<double>{0.25}, 100).entries ==
        mat(2, 1, {4.0, 4.0}));
  CHECK_THROWS_AS(coulomb_cost(std::vector<double>{0}, std::vector<double>{1}, 0.0), std::invalid_argument);

  const auto xs = datasets::unit_grid(16);
  const auto C = coulomb_cost(xs, xs, 32.0);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(C(i, j) == C(j, i));
      for (std::size_t k = 0; k < 16; ++k)
        if (std::abs(xs[i] - xs[k]) > std::abs(xs[i] - xs[j])) CHECK(C(i, k) <= C(i, j));
    }
}

TEST_CASE("custom_cost validates entries") {
  CHECK_THROWS_AS(custom_cost(mat(1, 2, {1.0, -1.0})), std::invalid_argument);
  CHECK_THROWS_AS(custom_cost(mat(1, 1, {INFINITY})), std::invalid_argument);
  CHECK(custom_cost(mat(1, 1, {2.0})).kind == CostKind::custom);
}

TEST_CASE("transport_cost and marginal_residual examples") {
  const auto M = mat(2, 2, {0, 1, 1, 0});
  CHECK(transport_cost(TransportPlan::from_dense(mat(1, 1, {1}), PlanSource::exact), mat(1, 1, {3})) == 3.0);
  CHECK(transport_cost(TransportPlan::from_dense(mat(2, 2, {0.5, 0, 0, 0.5}), PlanSource::exact), M) == 0.0);
  CHECK(transport_cost(TransportPlan::from_dense(mat(2, 2, {0.3, 0, 0.3, 0.4}), PlanSource::exact), M) ==
        doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(transport_cost(TransportPlan::from_dense(mat(1, 1, {1}), PlanSource::exact), M),
                  std::invalid_argument);

  const std::vector<double> half{0.5, 0.5};
  auto r = marginal_residual(TransportPlan::from_dense(mat(2, 2, {0.5, 0, 0, 0.5}), PlanSource::exact), half, half);
  CHECK(r.first == 0.0);
  CHECK(r.second == 0.0);
  r = marginal_residual(TransportPlan::from_dense(mat(2, 2, {1, 0, 0, 0}), PlanSource::exact), half, half);
  CHECK(r.first == 0.5);
  CHECK(r.second == 0.5);

  const auto prob = datasets::random_problem(3, 4, 5);
  const auto sol = solve_exact(prob.p, prob.q, prob.cost);
  r = marginal_residual(sol.plan, prob.p.weights, prob.q.weights);
  CHECK(r.first <= 1e-9);
  CHECK(r.second <= 1e-9);
}

TEST_CASE("plan storage conversions agree") {
  const auto dense = mat(2, 3, {0.1, 0, 0.2, 0, 0.7, 0});
  const auto a = TransportPlan::from_dense(dense, PlanSource::exact);
  const auto b = TransportPlan::from_triples(2, 3, a.to_triples(), PlanSource::exact);
  CHECK(b.is_sparse);
  CHECK(b.to_dense() == dense);
  CHECK(a.total_mass() == doctest::Approx(1.0));
  CHECK_THROWS_AS(TransportPlan::from_triples(2, 2, {{2, 0, 1.0}}, PlanSource::exact), std::invalid_argument);
  CHECK_THROWS_AS(TransportPlan::from_triples(2, 2, {{0, 0, -1.0}}, PlanSource::exact), std::invalid_argument);
}

TEST_CASE("solve_exact examples") {
  {
    const std::vector<double> one{1.0};
    const auto sol = solve_exact(one, one, mat(1, 1, {2.5}));
    CHECK(sol.cost == 2.5);
    CHECK(sol.plan.to_dense() == mat(1, 1, {1.0}));
  }
  {
    const std::vector<double> half{0.5, 0.5};
    const auto M = mat(2, 2, {0, 1, 1, 0});
    const auto sol = solve_exact(half, half, M);
    CHECK(sol.cost == 0.0);
    CHECK(sol.plan.to_dense() == mat(2, 2, {0.5, 0, 0, 0.5}));
    check_exact_contract(half, half, M, sol);
  }
  {
    const std::vector<double> p{0.3, 0.7}, q{0.6, 0.4};
    const auto M = mat(2, 2, {0, 1, 1, 0});
    const auto sol = solve_exact(p, q, M);
    CHECK(sol.cost == doctest::Approx(0.3).epsilon(1e-12));
    check_exact_contract(p, q, M, sol);
  }
}

TEST_CASE("solve_exact rejects inconsistent input") {
  const std::vector<double> p{0.5, 0.5}, q{1.0};
  CHECK_THROWS_AS(solve_exact(p, q, mat(2, 2, {0, 1, 1, 0})), std::invalid_argument);
  CHECK_THROWS_AS(solve_exact(p, std::vector<double>{0.5, 0.4}, mat(2, 2, {0, 1, 1, 0})),
                  std::invalid_argument);
}

TEST_CASE("solve_exact matches vertex enumeration on small instances") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t m1 = 2 + seed % 3, m2 = 2 + (seed / 3) % 3;
    const auto prob = datasets::random_problem(m1, m2, 1000 + seed);
    const auto sol = solve_exact(prob.p, prob.q, prob.cost);
    CHECK(std::abs(sol.cost - oracle::brute_force_ot(prob.p.weights, prob.q.weights, prob.cost.entries)) <= 1e-9);
    check_exact_contract(prob.p.weights, prob.q.weights, prob.cost.entries, sol);
  }
}

TEST_CASE("solve_exact survives degenerate instances") {
  // uniform marginals on integer costs: heavily degenerate bases and ties
  for (std::size_t n : {3u, 5u, 8u, 12u}) {
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    Matrix M(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) M(i, j) = static_cast<double>((i * 7 + j * 3) % 4);
    const auto sol = solve_exact(w, w, M);
    check_exact_contract(w, w, M, sol);
    if (n <= 4) CHECK(std::abs(sol.cost - oracle::brute_force_ot(w, w, M)) <= 1e-9);
  }
  // all-equal costs
  const std::vector<double> p{0.2, 0.3, 0.5}, q{0.5, 0.5};
  const auto sol = solve_exact(p, q, Matrix(3, 2, 1.0));
  CHECK(sol.cost == doctest::Approx(1.0));
  check_exact_contract(p, q, Matrix(3, 2, 1.0), sol);
}

TEST_CASE("exact plan is cheaper than any random feasible plan") {
  const auto prob = datasets::random_problem(5, 6, 3);
  const auto sol = solve_exact(prob.p, prob.q, prob.cost);
  // product coupling and north-west style couplings are feasible
  Matrix outer(5, 6);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j) outer(i, j) = prob.p.weights[i] * prob.q.weights[j];
  CHECK(transport_cost(TransportPlan::from_dense(outer, PlanSource::exact), prob.cost) >= sol.cost - 1e-9);
}

TEST_CASE("larger exact solves keep the contract") {
  const auto toy = datasets::toy1d(32);
  const auto sol = solve_exact(toy.p, toy.q, toy.cost);
  check_exact_contract(toy.p.weights, toy.q.weights, toy.cost.entries, sol);
  const auto cou = datasets::coulomb1d(32);
  const auto sc = solve_exact(cou.p, cou.q, cou.cost);
  check_exact_contract(cou.p.weights, cou.q.weights, cou.cost.entries, sc);
}
