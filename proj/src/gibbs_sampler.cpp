#include "gibbs_ot/gibbs_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gibbs_ot/annealing_analysis.hpp"

namespace gibbs_ot {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_temperature(double T) {
  if (!(T >= 0.0) || !std::isfinite(T))
    throw std::invalid_argument("temperature must be finite and nonnegative");
}

}  // namespace

GibbsChain::GibbsChain(std::span<const double> p, std::span<const double> q, const Matrix& cost,
                       std::uint64_t seed, std::uint64_t chain_id)
    : p_(p), q_(q), cost_(&cost) {
  check_dimensions();
  const std::size_t m1 = p.size(), m2 = q.size();
  state_.g.assign(m1, 0.0);
  state_.h.assign(m2, 0.0);
  state_.U.assign(m1, std::numeric_limits<double>::infinity());
  state_.L.assign(m2, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m1; ++i) {
    const auto row = cost.row(i);
    for (std::size_t j = 0; j < m2; ++j) {
      state_.U[i] = std::min(state_.U[i], row[j]);
      state_.L[j] = std::max(state_.L[j], -row[j]);
    }
  }
  state_.rng = RngKey{seed, chain_id};
}

GibbsChain::GibbsChain(std::span<const double> p, std::span<const double> q, const Matrix& cost,
                       ChainState state)
    : p_(p), q_(q), cost_(&cost), state_(std::move(state)) {
  check_dimensions();
  if (state_.g.size() != p.size() || state_.U.size() != p.size() ||
      state_.h.size() != q.size() || state_.L.size() != q.size()) {
    throw std::invalid_argument("GibbsChain: saved state does not match problem dimensions");
  }
}

void GibbsChain::check_dimensions() const {
  if (p_.empty() || q_.empty()) throw std::invalid_argument("GibbsChain: empty marginal");
  if (cost_->rows() != p_.size() || cost_->cols() != q_.size()) {
    throw std::invalid_argument("GibbsChain: cost is " + std::to_string(cost_->rows()) + "x" +
                                std::to_string(cost_->cols()) + " but marginals are " +
                                std::to_string(p_.size()) + " and " + std::to_string(q_.size()));
  }
}

void GibbsChain::rebind_marginals(std::span<const double> p, std::span<const double> q) {
  if (p.size() != p_.size() || q.size() != q_.size())
    throw std::invalid_argument("rebind_marginals: dimensions changed");
  p_ = p;
  q_ = q;
}

void GibbsChain::update_L(double T, const double* theta) {
  check_temperature(T);
  const std::size_t m1 = rows(), m2 = cols();
  auto& L = state_.L;
  L.assign(m2, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m1; ++i) {
    const auto row = cost_->row(i);
    const double gi = state_.g[i];
    for (std::size_t j = 0; j < m2; ++j) L[j] = std::max(L[j], gi - row[j]);
  }
  const std::uint64_t step = state_.half_steps;
  for (std::size_t j = 0; j < m2; ++j) {
    const double t = theta ? theta[j] : state_.rng.exponential(step, j);
    state_.h[j] = T == 0.0 ? L[j] : L[j] + t * T / q_[j];
  }
  ++state_.half_steps;
}

void GibbsChain::update_U(double T, const double* theta) {
  check_temperature(T);
  const std::size_t m1 = rows(), m2 = cols();
  const std::uint64_t step = state_.half_steps;
  for (std::size_t i = 0; i < m1; ++i) {
    const auto row = cost_->row(i);
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m2; ++j) u = std::min(u, row[j] + state_.h[j]);
    state_.U[i] = u;
    const double t = theta ? theta[i] : state_.rng.exponential(step, i);
    state_.g[i] = T == 0.0 ? u : u - t * T / p_[i];
  }
  ++state_.half_steps;
}

void GibbsChain::half_step_L(double T) { update_L(T, nullptr); }

void GibbsChain::half_step_L(double T, std::span<const double> theta) {
  if (theta.size() != cols()) throw std::invalid_argument("half_step_L: theta has wrong length");
  update_L(T, theta.data());
}

void GibbsChain::half_step_U(double T) { update_U(T, nullptr); }

void GibbsChain::half_step_U(double T, std::span<const double> theta) {
  if (theta.size() != rows()) throw std::invalid_argument("half_step_U: theta has wrong length");
  update_U(T, theta.data());
}

void GibbsChain::sweep(double T_odd, double T_even) {
  if (!(T_odd >= 0.0) || !(T_even >= 0.0))
    throw std::invalid_argument("sweep: temperatures must be nonnegative");
  update_L(T_odd, nullptr);
  update_U(T_even, nullptr);
}

double GibbsChain::energy_z() const { return dot(p_, state_.U) - dot(q_, state_.L); }

double GibbsChain::energy_gh() const { return dot(p_, state_.g) - dot(q_, state_.h); }

double GibbsChain::dual_feasibility_residual() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows(); ++i) {
    const auto row = cost_->row(i);
    for (std::size_t j = 0; j < cols(); ++j)
      worst = std::max(worst, state_.g[i] - state_.h[j] - row[j]);
  }
  return worst;
}

TransportPlan GibbsChain::recover_plan() const {
  if (state_.sweeps() == 0)
    throw std::logic_error("recover_plan: no completed sweep yet");
  const std::size_t m1 = rows(), m2 = cols();
  const Matrix& M = *cost_;

  std::vector<PlanEntry> entries;
  entries.reserve(m1 + m2);
  auto add = [&entries](std::size_t i, std::size_t j, double mass) {
    for (auto& e : entries) {
      if (e.row == i && e.col == j) {
        e.mass += mass;
        return;
      }
    }
    entries.push_back({i, j, mass});
  };
  for (std::size_t i = 0; i < m1; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m2; ++j)
      if (M(i, j) + state_.L[j] < M(i, best) + state_.L[best]) best = j;
    add(i, best, 0.5 * p_[i]);
  }
  for (std::size_t j = 0; j < m2; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m1; ++i)
      if (state_.U[i] - M(i, j) > state_.U[best] - M(best, j)) best = i;
    add(best, j, 0.5 * q_[j]);
  }
  return TransportPlan::from_triples(m1, m2, std::move(entries), PlanSource::gibbs_recovered);
}

TraceRecord GibbsChain::snapshot(double T) const {
  return {state_.sweeps(), T, energy_z(), energy_gh(), dual_feasibility_residual()};
}

MixReport GibbsChain::run_until_mixed(double T, std::size_t tau, std::size_t max_sweeps) {
  if (tau == 0) throw std::invalid_argument("run_until_mixed: tau must be at least 1");
  if (!(T > 0.0)) throw std::invalid_argument("run_until_mixed: T must be positive");
  MixReport report;
  std::vector<double> history{energy_z()};
  while (report.sweeps_used < max_sweeps) {
    sweep(T, T);
    ++report.sweeps_used;
    const double v = energy_z();
    history.push_back(v);
    report.trace.push_back({state_.sweeps(), T, v, energy_gh(), dual_feasibility_residual()});
    if (history.size() > tau) {
      const double increase = v - history[history.size() - 1 - tau];
      // The relative threshold degenerates for V <= 0; fall back to an
      // absolute one there.
      const double scale = v > 0.0 ? v : 1.0;
      if (increase < 0.01 * static_cast<double>(tau) * T * scale) {
        report.mixed = true;
        break;
      }
    }
  }
  report.final_V = history.back();
  return report;
}

std::pair<std::vector<double>, std::vector<double>> GibbsChain::gradient_pair() const {
  std::vector<double> neg_L(state_.L.size());
  for (std::size_t j = 0; j < neg_L.size(); ++j) neg_L[j] = -state_.L[j];
  return {state_.U, std::move(neg_L)};
}

std::vector<TraceRecord> anneal(GibbsChain& chain, TemperatureSchedule& schedule,
                                std::size_t sweeps,
                                const std::function<void(const TraceRecord&)>& on_sweep) {
  std::vector<TraceRecord> trace;
  trace.reserve(sweeps);
  for (std::size_t s = 0; s < sweeps; ++s) {
    double T;
    if (schedule.needs_critical_temperature()) {
      T = schedule.next(critical_temperature(chain.z_view(), Half::even));
    } else {
      T = schedule.next();
    }
    chain.sweep(T, T);
    trace.push_back(chain.snapshot(T));
    if (on_sweep) on_sweep(trace.back());
  }
  return trace;
}

}  // namespace gibbs_ot
