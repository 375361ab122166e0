#include "gibbs_ot/annealing_analysis.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gibbs_ot {
namespace {

// Endpoints of reversed exponentials sorted nonincreasing (stable in the
// original index), with the unnormalized weights p_i (or q_j) alongside.
// The rate of coordinate k is weight[k] / T.
struct SortedEndpoints {
  std::vector<double> z;
  std::vector<double> weight;
  std::size_t first = 0;  // original index of the largest endpoint
};

SortedEndpoints sort_descending(std::span<const double> z, std::span<const double> w) {
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&z](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  SortedEndpoints s;
  s.z.reserve(z.size());
  s.weight.reserve(z.size());
  for (std::size_t k : order) {
    s.z.push_back(z[k]);
    s.weight.push_back(w[k]);
  }
  s.first = order.front();
  return s;
}

// (z_1 - E[max]) / T, evaluated as
//   sum_k (1 - h_k) prod_{l<k} h_l / S_k,  S_k = sum_{l<=k} w_l,
//   h_k = exp(S_k (z_{k+1} - z_k) / T),  h_n = 0.
double normalized_gap(const SortedEndpoints& s, double T) {
  const std::size_t n = s.z.size();
  double total = 0.0;
  double prefix_weight = 0.0;
  double survive = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    prefix_weight += s.weight[k];
    double one_minus_h = 1.0;
    double h = 0.0;
    if (k + 1 < n) {
      const double x = prefix_weight * (s.z[k + 1] - s.z[k]) / T;
      h = std::exp(x);
      one_minus_h = -std::expm1(x);
    }
    total += one_minus_h * survive / prefix_weight;
    survive *= h;
    if (survive == 0.0) break;
  }
  return total;
}

struct DriftParts {
  double slack = 0.0;  // T-independent part
  double coeff = 0.0;  // <phi, q> or <psi, p>
};

void check_view(const ZView& z) {
  if (z.cost == nullptr) throw std::invalid_argument("analysis: missing cost matrix");
  if (z.cost->rows() != z.p.size() || z.cost->cols() != z.q.size() ||
      z.U.size() != z.p.size() || z.L.size() != z.q.size())
    throw std::invalid_argument("analysis: inconsistent z-state dimensions");
}

// Pre-sorted endpoint sets for every column (even) or row (odd) of a state.
// Sorting does not depend on T, so the critical-temperature search sorts once.
struct DriftModel {
  Half half;
  std::vector<SortedEndpoints> sets;
  std::vector<double> outer_weight;  // q_j (even) or p_i (odd)
  double slack = 0.0;

  DriftModel(const ZView& z, Half h) : half(h) {
    check_view(z);
    const Matrix& M = *z.cost;
    const std::size_t m1 = z.p.size(), m2 = z.q.size();
    if (half == Half::even) {
      std::vector<double> endpoints(m1);
      for (std::size_t j = 0; j < m2; ++j) {
        for (std::size_t i = 0; i < m1; ++i) endpoints[i] = z.U[i] - M(i, j);
        sets.push_back(sort_descending(endpoints, z.p));
        slack += z.q[j] * (z.L[j] - sets.back().z.front());
      }
      outer_weight.assign(z.q.begin(), z.q.end());
    } else {
      std::vector<double> endpoints(m2);
      for (std::size_t i = 0; i < m1; ++i) {
        // U_i is a min of shifted exponentials; negate to reuse the max form.
        for (std::size_t j = 0; j < m2; ++j) endpoints[j] = -(M(i, j) + z.L[j]);
        sets.push_back(sort_descending(endpoints, z.q));
        slack += z.p[i] * (-sets.back().z.front() - z.U[i]);
      }
      outer_weight.assign(z.p.begin(), z.p.end());
    }
  }

  double coeff(double T) const {
    double c = 0.0;
    for (std::size_t k = 0; k < sets.size(); ++k) c += outer_weight[k] * normalized_gap(sets[k], T);
    return c;
  }

  double drift(double T) const { return slack + T * coeff(T); }
};

void check_T(double T, const char* who) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument(std::string(who) + ": T must be positive and finite");
}

}  // namespace

double max_exp_expectation(const MaxExpSpec& spec) {
  const std::size_t n = spec.endpoints.size();
  if (n == 0 || spec.rates.size() != n)
    throw std::invalid_argument("max_exp_expectation: need matching, nonempty endpoints and rates");
  for (double w : spec.rates)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("max_exp_expectation: rates must be positive");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&spec](std::size_t a, std::size_t b) {
    return spec.endpoints[a] > spec.endpoints[b];
  });

  double rate_sum = 0.0;
  double prod = 1.0;  // prod_{j<i} h_j
  double correction = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double zk = spec.endpoints[order[k]];
    rate_sum += spec.rates[order[k]];
    const double h = k + 1 < n ? std::exp(rate_sum * (spec.endpoints[order[k + 1]] - zk)) : 0.0;
    correction += (1.0 - h) * prod / rate_sum;
    prod *= h;
  }
  return spec.endpoints[order.front()] - correction;
}

AuxStatistic compute_phi(std::span<const double> U, std::span<const double> cost_col,
                         std::span<const double> p, double T) {
  check_T(T, "compute_phi");
  if (U.empty() || U.size() != cost_col.size() || U.size() != p.size())
    throw std::invalid_argument("compute_phi: dimension mismatch");
  std::vector<double> endpoints(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) endpoints[i] = U[i] - cost_col[i];
  const auto sorted = sort_descending(endpoints, p);
  return {normalized_gap(sorted, T), sorted.first};
}

AuxStatistic compute_psi(std::span<const double> L, std::span<const double> cost_row,
                         std::span<const double> q, double T) {
  check_T(T, "compute_psi");
  if (L.empty() || L.size() != cost_row.size() || L.size() != q.size())
    throw std::invalid_argument("compute_psi: dimension mismatch");
  std::vector<double> endpoints(L.size());
  for (std::size_t j = 0; j < L.size(); ++j) endpoints[j] = -(cost_row[j] + L[j]);
  const auto sorted = sort_descending(endpoints, q);
  return {normalized_gap(sorted, T), sorted.first};
}

double regret(std::span<const double> x, std::span<const double> w) {
  if (x.empty() || x.size() != w.size()) throw std::invalid_argument("regret: dimension mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += w[i] * x[i];
  return mean - *std::min_element(x.begin(), x.end());
}

SweepStats concentration_ingredients(const ZView& z, double T) {
  check_T(T, "concentration_ingredients");
  check_view(z);
  const Matrix& M = *z.cost;
  const std::size_t m1 = z.p.size(), m2 = z.q.size();
  SweepStats s;
  s.phi.resize(m2);
  s.I.resize(m2);
  s.psi.resize(m1);
  s.J.resize(m1);

  std::vector<double> col(m1), x(m1);
  for (std::size_t j = 0; j < m2; ++j) {
    for (std::size_t i = 0; i < m1; ++i) {
      col[i] = M(i, j);
      x[i] = M(i, j) - z.U[i];
    }
    const auto a = compute_phi(z.U, col, z.p, T);
    s.phi[j] = a.value;
    s.I[j] = a.index;
    s.C_even += z.q[j] * a.value;
    s.D_even += z.q[j] * regret(x, z.p);
  }
  std::vector<double> y(m2);
  for (std::size_t i = 0; i < m1; ++i) {
    const auto row = M.row(i);
    for (std::size_t j = 0; j < m2; ++j) y[j] = row[j] + z.L[j];
    const auto a = compute_psi(z.L, row, z.q, T);
    s.psi[i] = a.value;
    s.J[i] = a.index;
    s.C_odd += z.p[i] * a.value;
    s.D_odd += z.p[i] * regret(y, z.q);
  }
  return s;
}

double expected_drift(const ZView& z, double T, Half half) {
  check_T(T, "expected_drift");
  return DriftModel(z, half).drift(T);
}

double drift_slack(const ZView& z, Half half) { return DriftModel(z, half).slack; }

double critical_temperature(const ZView& z, Half half) {
  const DriftModel model(z, half);
  if (model.slack >= 0.0) return 0.0;

  // Bracket the root: drift(T) = slack + T coeff(T) is increasing in T.
  const double c_hi = model.coeff(std::numeric_limits<double>::max() / 4);
  assert(c_hi > 0.0);
  double hi = -model.slack / c_hi;
  while (model.drift(hi) <= 0.0) hi *= 2.0;
  double lo = hi / 2.0;
  while (model.drift(lo) > 0.0) lo /= 2.0;

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (model.drift(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::abs(model.drift(lo)) <= std::abs(model.drift(hi)) ? lo : hi;
}

ResidualTracker::ResidualTracker(const GibbsChain& chain, double T)
    : half_steps_(chain.state().half_steps),
      r_(chain.energy_z()),
      prev_T_(T),
      prev_U_(chain.state().U),
      prev_L_(chain.state().L) {
  check_T(T, "ResidualTracker");
}

void ResidualTracker::update(const GibbsChain& chain, double T, Half half) {
  check_T(T, "ResidualTracker::update");
  const std::uint64_t step = chain.state().half_steps;
  if (step != half_steps_ + 1) {
    throw std::logic_error("ResidualTracker: expected half-step " +
                           std::to_string(half_steps_ + 1) + ", chain is at " +
                           std::to_string(step));
  }
  const Half taken = step % 2 == 1 ? Half::odd : Half::even;
  if (taken != half) throw std::logic_error("ResidualTracker: half-step parity mismatch");
  const Half previous = taken == Half::odd ? Half::even : Half::odd;

  const ZView prev{chain.p(), chain.q(), &chain.cost(), prev_U_, prev_L_};
  const DriftModel model(prev, previous);
  const double coeff = model.coeff(prev_T_);
  drift_sum_ += model.slack + prev_T_ * coeff;
  last_left_bound_ = coeff * prev_T_;

  const double r_new = chain.energy_z() - drift_sum_;
  last_drop_ = r_ - r_new;
  r_ = r_new;
  ++n_;
  half_steps_ = step;
  prev_T_ = T;
  prev_U_ = chain.state().U;
  prev_L_ = chain.state().L;
}

BoundReport evaluate_bounds(const BoundQuery& query, std::span<const double> temperatures,
                            std::span<const SweepStats> stats) {
  if (!(query.epsilon > 0.0 && query.epsilon < 1.0))
    throw std::invalid_argument("evaluate_bounds: epsilon must lie in (0, 1)");
  if (!(query.K > 0.0)) throw std::invalid_argument("evaluate_bounds: K must be positive");
  if (!(query.gamma > 0.0)) throw std::invalid_argument("evaluate_bounds: gamma must be positive");
  const std::size_t steps = query.a.size();
  if (steps == 0 || temperatures.size() != steps || stats.size() != steps)
    throw std::invalid_argument("evaluate_bounds: a, temperatures and stats lengths differ");

  double sum_sq = 0.0;
  for (double a : query.a) {
    if (!(a >= 0.0)) throw std::invalid_argument("evaluate_bounds: a_n must be nonnegative");
    sum_sq += a * a;
  }

  BoundReport out;
  out.left_prob = std::exp(-query.K * query.K / (2.0 * sum_sq));
  out.right_prob_raw = out.left_prob + query.epsilon;
  out.right_prob = std::min(out.right_prob_raw, 1.0);

  const double N = static_cast<double>((steps + 1) / 2);
  const double m = static_cast<double>(std::max(stats[0].psi.size(), stats[0].phi.size()));
  if (m == 0.0) throw std::invalid_argument("evaluate_bounds: stats carry no phi/psi");
  const double log_term = std::log(2.0 * N * m / query.epsilon);
  for (std::size_t k = 0; k < steps; ++k) {
    const bool odd = k % 2 == 0;  // k = n - 1
    const double C = odd ? stats[k].C_odd : stats[k].C_even;
    const double D = odd ? stats[k].D_odd : stats[k].D_even;
    out.condition_i.push_back(C * temperatures[k] <= query.a[k]);
    out.condition_ii.push_back(log_term * temperatures[k] + D <= query.gamma * query.a[k]);
  }
  return out;
}

}  // namespace gibbs_ot
