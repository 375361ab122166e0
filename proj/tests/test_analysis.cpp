#include <doctest.h>

#include <cmath>
#include <random>

#include "gibbs_ot/annealing_analysis.hpp"
#include "gibbs_ot/datasets.hpp"
#include "oracles.hpp"

using namespace gibbs_ot;

namespace {

// Frozen state after a few warm sweeps.
struct Frozen {
  datasets::Problem prob;
  ChainState state;
};

Frozen frozen(std::size_t m1, std::size_t m2, std::uint64_t seed, std::size_t sweeps, double T) {
  Frozen f{datasets::random_problem(m1, m2, seed), {}};
  GibbsChain chain(f.prob.p.weights, f.prob.q.weights, f.prob.cost.entries, seed);
  for (std::size_t t = 0; t < sweeps; ++t) chain.sweep(T, T);
  f.state = chain.state();
  return f;
}

ZView view(const Frozen& f) {
  return {f.prob.p.weights, f.prob.q.weights, &f.prob.cost.entries, f.state.U, f.state.L};
}

}  // namespace

TEST_CASE("max_exp_expectation examples") {
  CHECK(max_exp_expectation({{0.0}, {1.0}}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(max_exp_expectation({{0.0, 0.0}, {1.0, 1.0}}) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(max_exp_expectation({{1.0, 0.0}, {1.0, 1.0}}) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-14));
  // ordering of the input does not matter
  CHECK(max_exp_expectation({{0.0, 1.0}, {1.0, 1.0}}) == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(max_exp_expectation({{0.0}, {0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(max_exp_expectation({{0.0, 1.0}, {1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(max_exp_expectation({{}, {}}), std::invalid_argument);
}

TEST_CASE("max_exp_expectation agrees with quadrature") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> z(-1.0, 1.0), w(0.2, 5.0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + t % 6;
    MaxExpSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
      spec.endpoints.push_back(t % 4 == 0 && i > 0 ? spec.endpoints[0] : z(rng));  // ties
      spec.rates.push_back(w(rng));
    }
    CHECK(max_exp_expectation(spec) ==
          doctest::Approx(oracle::max_exp_quadrature(spec.endpoints, spec.rates)).epsilon(1e-9));
  }
}

TEST_CASE("compute_phi and compute_psi small cases") {
  const std::vector<double> one{1.0}, c1{0.3};
  CHECK(compute_phi(std::vector<double>{0.5}, c1, std::vector<double>{0.25}, 0.7).value ==
        doctest::Approx(4.0));
  CHECK(compute_psi(std::vector<double>{0.5}, c1, std::vector<double>{0.25}, 0.7).value ==
        doctest::Approx(4.0));
  const std::vector<double> half{0.5, 0.5};
  const auto phi = compute_phi(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}, half, 0.2);
  CHECK(phi.value == doctest::Approx(1.0));
  CHECK(phi.index == 0);
  const auto psi = compute_psi(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}, half, 0.2);
  CHECK(psi.value == doctest::Approx(1.0));
  CHECK(psi.index == 0);
  CHECK_THROWS_AS(compute_phi(one, c1, one, 0.0), std::invalid_argument);
}

TEST_CASE("phi and psi agree with the max-of-exponentials mapping") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = frozen(4, 5, seed, 3, 0.1);
    const double T = 0.05 + 0.01 * static_cast<double>(seed);
    const auto& M = f.prob.cost.entries;
    const auto& p = f.prob.p.weights;
    const auto& q = f.prob.q.weights;
    for (std::size_t j = 0; j < 5; ++j) {
      MaxExpSpec spec;
      for (std::size_t i = 0; i < 4; ++i) {
        spec.endpoints.push_back(f.state.U[i] - M(i, j));
        spec.rates.push_back(p[i] / T);
      }
      const double top = *std::max_element(spec.endpoints.begin(), spec.endpoints.end());
      const double expect = (top - max_exp_expectation(spec)) / T;
      CHECK(compute_phi(f.state.U, M.col(j), p, T).value == doctest::Approx(expect).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < 4; ++i) {
      // U_i = min_j (M_ij + h_j) is minus the max of reversed exponentials at -(M_ij + L_j)
      MaxExpSpec spec;
      for (std::size_t j = 0; j < 5; ++j) {
        spec.endpoints.push_back(-(M(i, j) + f.state.L[j]));
        spec.rates.push_back(q[j] / T);
      }
      const double top = *std::max_element(spec.endpoints.begin(), spec.endpoints.end());
      const double expect = (top - max_exp_expectation(spec)) / T;
      CHECK(compute_psi(f.state.L, M.row(i), q, T).value == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditional expectation law, Monte Carlo") {
  std::mt19937_64 rng(2024);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = frozen(3, 4, 40 + seed, 4, 0.1);
    const auto& M = f.prob.cost.entries;
    const auto& p = f.prob.p.weights;
    const auto& q = f.prob.q.weights;
    const double T = 0.08;
    std::vector<oracle::Accumulator> L(4), U(3);
    for (int k = 0; k < 20000; ++k) {
      const auto l = oracle::simulate_L(f.state.U, p, M, T, rng);
      for (std::size_t j = 0; j < 4; ++j) L[j].add(l[j]);
      const auto u = oracle::simulate_U(f.state.L, q, M, T, rng);
      for (std::size_t i = 0; i < 3; ++i) U[i].add(u[i]);
    }
    for (std::size_t j = 0; j < 4; ++j) {
      const auto phi = compute_phi(f.state.U, M.col(j), p, T);
      const double expect = f.state.U[phi.index] - M(phi.index, j) - phi.value * T;
      const auto m = L[j].moments();
      CHECK(std::abs(m.mean - expect) <= 4.0 * m.se);
    }
    for (std::size_t i = 0; i < 3; ++i) {
      const auto psi = compute_psi(f.state.L, M.row(i), q, T);
      const double expect = M(i, psi.index) + f.state.L[psi.index] + psi.value * T;
      const auto m = U[i].moments();
      CHECK(std::abs(m.mean - expect) <= 4.0 * m.se);
    }
  }
}

TEST_CASE("regret") {
  CHECK(regret(std::vector<double>{2, 2, 2}, std::vector<double>{0.2, 0.3, 0.5}) == doctest::Approx(0.0));
  CHECK(regret(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}) == 0.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(5), w(5);
    double s = 0;
    for (auto& v : x) v = u(rng);
    for (auto& v : w) s += v = u(rng);
    for (auto& v : w) v /= s;
    CHECK(regret(x, w) >= 0.0);
  }
}

TEST_CASE("concentration ingredients on a 1x1 problem") {
  const std::vector<double> one{1.0};
  const Matrix M(1, 1, std::vector<double>{0.4});
  GibbsChain chain(one, one, M, 1);
  chain.sweep(0.1, 0.1);
  const auto st = concentration_ingredients(chain.z_view(), 0.1);
  CHECK(st.psi[0] == doctest::Approx(1.0));
  CHECK(st.phi[0] == doctest::Approx(1.0));
  CHECK(st.C_odd == doctest::Approx(1.0));
  CHECK(st.C_even == doctest::Approx(1.0));
  CHECK(st.D_odd == 0.0);
  CHECK(st.D_even == 0.0);
}

TEST_CASE("concentration ingredients match their definitions") {
  const auto f = frozen(4, 3, 77, 5, 0.1);
  const auto z = view(f);
  const auto& M = f.prob.cost.entries;
  const double T = 0.03;
  const auto st = concentration_ingredients(z, T);
  double C_odd = 0, C_even = 0, D_odd = 0, D_even = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    C_odd += st.psi[i] * z.p[i];
    std::vector<double> x(3);
    for (std::size_t j = 0; j < 3; ++j) x[j] = M(i, j) + z.L[j];
    D_odd += z.p[i] * (oracle::dot(x, f.prob.q.weights) - *std::min_element(x.begin(), x.end()));
    CHECK(st.psi[i] > 0.0);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    C_even += st.phi[j] * z.q[j];
    std::vector<double> x(4);
    for (std::size_t i = 0; i < 4; ++i) x[i] = M(i, j) - z.U[i];
    D_even += z.q[j] * (oracle::dot(x, f.prob.p.weights) - *std::min_element(x.begin(), x.end()));
    CHECK(st.phi[j] > 0.0);
  }
  CHECK(st.C_odd == doctest::Approx(C_odd).epsilon(1e-13));
  CHECK(st.C_even == doctest::Approx(C_even).epsilon(1e-13));
  CHECK(st.D_odd == doctest::Approx(D_odd).epsilon(1e-12));
  CHECK(st.D_even == doctest::Approx(D_even).epsilon(1e-12));
}

TEST_CASE("expected drift") {
  // zero-slack state: drift = <phi, q> T
  const std::vector<double> half{0.5, 0.5};
  const Matrix M(2, 2, std::vector<double>{0, 1, 1, 0});
  const GibbsChain chain(half, half, M, 1);
  const double T = 0.3;
  const auto st = concentration_ingredients(chain.z_view(), T);
  CHECK(drift_slack(chain.z_view(), Half::even) == 0.0);
  CHECK(expected_drift(chain.z_view(), T, Half::even) == doctest::Approx(st.C_even * T).epsilon(1e-14));
  CHECK(critical_temperature(chain.z_view(), Half::even) == 0.0);
  CHECK(critical_temperature(chain.z_view(), Half::odd) == 0.0);

  // monotone in T
  const auto f = frozen(5, 5, 3, 6, 0.05);
  double prev = -INFINITY;
  for (double t = 0.001; t < 1.0; t *= 1.7) {
    const double d = expected_drift(view(f), t, Half::odd);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("expected drift matches Monte Carlo") {
  std::mt19937_64 rng(77);
  const auto f = frozen(4, 4, 8, 5, 0.05);
  const auto& M = f.prob.cost.entries;
  const auto& p = f.prob.p.weights;
  const auto& q = f.prob.q.weights;
  const double T = 0.04;
  const double V0 = oracle::dot(p, f.state.U) - oracle::dot(q, f.state.L);
  oracle::Accumulator even, odd;
  for (int k = 0; k < 10000; ++k) {
    const auto L = oracle::simulate_L(f.state.U, p, M, T, rng);
    even.add(oracle::dot(p, f.state.U) - oracle::dot(q, L) - V0);
    const auto U = oracle::simulate_U(f.state.L, q, M, T, rng);
    odd.add(oracle::dot(p, U) - oracle::dot(q, f.state.L) - V0);
  }
  CHECK(std::abs(even.moments().mean - expected_drift(view(f), T, Half::even)) <= 3.0 * even.moments().se);
  CHECK(std::abs(odd.moments().mean - expected_drift(view(f), T, Half::odd)) <= 3.0 * odd.moments().se);
}

TEST_CASE("critical temperature") {
  const std::vector<double> one{1.0};
  const Matrix M(1, 1, std::vector<double>{0.1});
  GibbsChain chain(one, one, M, 1);
  chain.half_step_L(0.1, std::vector<double>{1.0});
  CHECK(drift_slack(chain.z_view(), Half::odd) == doctest::Approx(-0.1));
  CHECK(critical_temperature(chain.z_view(), Half::odd) == doctest::Approx(0.1).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto f = frozen(3 + seed % 4, 2 + seed % 5, 900 + seed, 1 + seed % 7, 0.2);
    for (Half h : {Half::odd, Half::even}) {
      const double Tc = critical_temperature(view(f), h);
      CHECK(Tc >= 0.0);
      CHECK(std::abs(expected_drift(view(f), Tc, h)) <= 1e-10);
    }
  }
}

TEST_CASE("residual tracker") {
  const auto prob = datasets::random_problem(3, 3, 4);
  const auto& M = prob.cost.entries;
  GibbsChain chain(prob.p.weights, prob.q.weights, M, 1);
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const double T = 0.1;
  chain.half_step_L(T, ones);
  ResidualTracker tr(chain, T);
  CHECK(tr.r() == chain.energy_z());
  CHECK(tr.n() == 1);

  const ChainState z1 = chain.state();
  const ZView v1{prob.p.weights, prob.q.weights, &M, z1.U, z1.L};
  const double drift1 = expected_drift(v1, T, Half::odd);
  chain.half_step_U(T, ones);
  tr.update(chain, T, Half::even);
  CHECK(tr.r() == doctest::Approx(chain.energy_z() - drift1).epsilon(1e-14));
  CHECK(tr.drift_sum() == doctest::Approx(drift1).epsilon(1e-14));

  // out of order: skipping a half-step
  chain.half_step_L(T, ones);
  chain.half_step_U(T, ones);
  CHECK_THROWS(tr.update(chain, T, Half::even));
}

TEST_CASE("evaluate_bounds examples") {
  std::vector<SweepStats> st(1);
  st[0].psi.resize(1);
  st[0].phi.resize(1);
  const std::vector<double> temps{0.1};
  BoundQuery q;
  q.a = {1.0};
  q.K = 1.0;
  q.epsilon = 0.5;
  auto r = evaluate_bounds(q, temps, st);
  CHECK(r.left_prob == doctest::Approx(0.60653).epsilon(1e-5));
  CHECK(r.right_prob_raw == doctest::Approx(1.10653).epsilon(1e-5));
  CHECK(r.right_prob == 1.0);
  q.K = 1e6;
  r = evaluate_bounds(q, temps, st);
  CHECK(r.left_prob < 1e-300);
  q.K = 0.0;
  CHECK_THROWS_AS(evaluate_bounds(q, temps, st), std::invalid_argument);
  q.K = 1.0;
  q.epsilon = 1.0;
  CHECK_THROWS_AS(evaluate_bounds(q, temps, st), std::invalid_argument);
  q.epsilon = 0.5;
  q.a = {1.0, 1.0};
  CHECK_THROWS_AS(evaluate_bounds(q, temps, st), std::invalid_argument);
}

TEST_CASE("evaluate_bounds condition flags") {
  std::vector<SweepStats> st(3);
  for (auto& s : st) {
    s.psi.resize(3);
    s.phi.resize(2);
  }
  st[0].C_odd = 2.0;
  st[0].D_odd = 0.1;
  st[1].C_even = 3.0;
  st[1].D_even = 5.0;
  st[2].C_odd = 1.0;
  st[2].D_odd = 0.0;
  const std::vector<double> temps{0.1, 0.5, 0.01};
  BoundQuery q;
  q.a = {0.25, 1.0, 1.0};
  q.gamma = 1.0;
  q.epsilon = 0.1;
  const auto r = evaluate_bounds(q, temps, st);
  CHECK(r.left_prob == doctest::Approx(std::exp(-1.0 / (2.0 * (0.0625 + 2.0)))));
  // odd steps use *_odd, even steps *_even
  CHECK(r.condition_i == std::vector<bool>{true, false, true});
  // N = 2, m = 3: log(2 * 2 * 3 / 0.1) = log 120
  const double lg = std::log(120.0);
  CHECK(r.condition_ii ==
        std::vector<bool>{lg * 0.1 + 0.1 <= 0.25, lg * 0.5 + 5.0 <= 1.0, lg * 0.01 <= 1.0});
  CHECK(r.condition_ii[2]);
}

TEST_CASE("residual increments stay centred across a temperature drop") {
  const auto prob = datasets::random_problem(3, 3, 12);
  const auto& M = prob.cost.entries;
  oracle::Accumulator at_drop;
  for (std::uint64_t c = 0; c < 4000; ++c) {
    GibbsChain chain(prob.p.weights, prob.q.weights, M, 8, c);
    chain.half_step_L(0.2);
    ResidualTracker tr(chain, 0.2);
    chain.half_step_U(0.2);
    tr.update(chain, 0.2, Half::even);
    const double before = tr.r();
    // the g drawn at 0.2 drives this L refresh, whatever the new temperature
    chain.half_step_L(0.02);
    tr.update(chain, 0.02, Half::odd);
    at_drop.add(tr.r() - before);
  }
  const auto m = at_drop.moments();
  CHECK(std::abs(m.mean) <= 4.0 * m.se);
}
