#include "gibbs_ot/wlm_nmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gibbs_ot/annealing_analysis.hpp"
#include "gibbs_ot/parallel.hpp"
#include "gibbs_ot/random.hpp"
#include "gibbs_ot/schedule.hpp"

namespace gibbs_ot {
namespace {

constexpr double kComponentInitFloor = 1e-6;

void check_finite(std::span<const double> grad, const char* who) {
  for (double x : grad)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite gradient");
}

bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&x](double v) { return v == x.front(); });
}

// base_i * exp(-step * grad_i), normalized, computed in the log domain so that
// large steps cannot underflow every entry at once.
std::vector<double> exponentiated(std::span<const double> base, std::span<const double> grad,
                                  double step) {
  std::vector<double> logw(base.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < base.size(); ++i) {
    logw[i] = base[i] > 0.0 ? std::log(base[i]) - step * grad[i]
                            : -std::numeric_limits<double>::infinity();
    top = std::max(top, logw[i]);
  }
  if (!std::isfinite(top)) throw std::invalid_argument("mirror step: base vector has no mass");
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : logw) w /= total;
  return logw;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> md_step(std::span<const double> v, std::span<const double> grad, double gamma) {
  if (v.size() != grad.size() || v.empty()) throw std::invalid_argument("md_step: size mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("md_step: gamma must be positive");
  check_finite(grad, "md_step");
  if (is_constant(grad)) return {v.begin(), v.end()};
  return exponentiated(v, grad, gamma);
}

AmdState AmdState::start(std::vector<double> beta0) {
  AmdState s;
  s.z = beta0;
  s.beta = std::move(beta0);
  return s;
}

void amd_step(AmdState& s, std::span<const double> grad, double gamma) {
  const std::size_t K = s.beta.size();
  if (K == 0 || grad.size() != K || s.z.size() != K)
    throw std::invalid_argument("amd_step: size mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("amd_step: gamma must be positive");
  check_finite(grad, "amd_step");
  ++s.k;
  if (K == 1) return;

  constexpr double r = 3.0;
  const double k = static_cast<double>(s.k);
  const double lambda = r / (r + k);
  std::vector<double> x(K);
  for (std::size_t i = 0; i < K; ++i) x[i] = lambda * s.z[i] + (1.0 - lambda) * s.beta[i];

  std::vector<double> beta_new;
  if (is_constant(grad)) {
    beta_new = x;
  } else {
    s.z = exponentiated(s.z, grad, k * gamma / r);
    beta_new = exponentiated(x, grad, gamma);
  }

  double progress = 0.0;
  for (std::size_t i = 0; i < K; ++i) progress += grad[i] * (beta_new[i] - s.beta[i]);
  if (progress > 0.0) {
    s.k = 0;
    s.z = beta_new;
  }
  s.beta = std::move(beta_new);
}

DiscreteMeasure mixed_weights(const NMFModel& model, std::size_t i) {
  if (i >= model.memberships.size())
    throw std::out_of_range("mixed_weights: instance " + std::to_string(i) + " out of range");
  const auto& beta = model.memberships[i];
  const std::size_t m = model.components.front().size();
  std::vector<double> w(m, 0.0);
  for (std::size_t k = 0; k < beta.size(); ++k)
    for (std::size_t x = 0; x < m; ++x) w[x] += beta[k] * model.components[k][x];
  return make_measure(w);
}

NMFModel initial_model(const NMFDataset& data, const TrainConfig& config) {
  if (config.K == 0) throw std::invalid_argument("NMF: K must be at least 1");
  if (data.shared_support.empty()) throw std::invalid_argument("NMF: empty shared support");
  if (data.instances.empty()) throw std::invalid_argument("NMF: empty dataset");
  const std::size_t m = data.shared_support.size();
  NMFModel model;
  model.shared_support = data.shared_support;
  const RngKey key{config.seed, std::numeric_limits<std::uint64_t>::max()};
  for (std::size_t k = 0; k < config.K; ++k) {
    std::vector<double> v(m);
    for (std::size_t x = 0; x < m; ++x) v[x] = std::max(key.uniform(k, x), kComponentInitFloor);
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& e : v) e /= total;
    model.components.push_back(std::move(v));
  }
  model.memberships.assign(data.instances.size(),
                           std::vector<double>(config.K, 1.0 / static_cast<double>(config.K)));
  return model;
}

NMFTrainer::NMFTrainer(const NMFDataset& data, TrainConfig config)
    : NMFTrainer(data, config, initial_model(data, config)) {}

NMFTrainer::NMFTrainer(const NMFDataset& data, TrainConfig config, NMFModel model)
    : data_(data), config_(config), model_(std::move(model)) {
  if (!(config_.gamma > 0.0)) throw std::invalid_argument("NMF: gamma must be positive");
  if (config_.tau == 0) throw std::invalid_argument("NMF: tau must be at least 1");
  const std::size_t n = data_.instances.size();
  if (model_.memberships.size() != n)
    throw std::invalid_argument("NMF: model and dataset instance counts differ");

  double support_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = data_.instances[i];
    if (inst.size() == 0) throw std::invalid_argument("NMF: empty instance " + std::to_string(i));
    if (!inst.support)
      throw std::invalid_argument("NMF: instance " + std::to_string(i) + " has no support");
    costs_.push_back(
        euclidean_cost(data_.shared_support, *inst.support, config_.cost_power).entries);
    support_total += static_cast<double>(inst.size());
  }
  decay_ = epoch_decay_factor(static_cast<double>(data_.shared_support.size()),
                              support_total / static_cast<double>(n));

  mixed_.resize(n);
  chains_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    refresh_mixed(i);
    amd_.push_back(AmdState::start(model_.memberships[i]));
  }
  if (!(model_.temperature > 0.0)) {
    model_.temperature = config_.initial_T > 0.0 ? config_.initial_T : default_temperature();
  }
}

void NMFTrainer::refresh_mixed(std::size_t i) {
  // Overwrite in place: the chain keeps a span on this buffer.
  const auto w = mixed_weights(model_, i).weights;
  mixed_[i].assign(w.begin(), w.end());
}

GibbsChain& NMFTrainer::chain(std::size_t i) {
  if (!chains_[i]) {
    chains_[i].emplace(mixed_[i], data_.instances[i].weights, costs_[i], config_.seed, i);
  }
  return *chains_[i];
}

double NMFTrainer::default_temperature() {
  double total = 0.0;
  // Fresh chains: the first L-step leaves (U, L) unchanged because g = 0, so
  // the initial state doubles as z^1 and its next refresh is U.
  for (std::size_t i = 0; i < chains_.size(); ++i)
    total += critical_temperature(chain(i).z_view(), Half::odd);
  const double n = static_cast<double>(chains_.size());
  if (total > 0.0) return config_.eta * total / n;
  // Zero slack everywhere (e.g. identical supports: U = L = 0 at start). Use
  // the finest cost resolution instead.
  double finest = 0.0;
  for (const auto& M : costs_) {
    double lo = std::numeric_limits<double>::infinity();
    for (double c : M.data())
      if (c > 0.0) lo = std::min(lo, c);
    finest += std::isfinite(lo) ? lo : 1.0;
  }
  return config_.eta * finest / n;
}

std::vector<double> NMFTrainer::oracle_step(std::size_t i, double T, MixReport* report) {
  if (i >= chains_.size()) throw std::out_of_range("oracle_step: instance out of range");
  GibbsChain& c = chain(i);
  c.rebind_marginals(mixed_[i], data_.instances[i].weights);
  auto r = c.run_until_mixed(T, config_.tau, config_.max_sweeps);
  if (report) *report = std::move(r);
  return c.state().U;
}

void NMFTrainer::apply_update(std::size_t i, std::span<const double> U) {
  const std::size_t K = model_.components.size();
  const auto& beta = model_.memberships[i];
  std::vector<double> grad(U.size());
  for (std::size_t k = 0; k < K; ++k) {
    if (beta[k] == 0.0) continue;
    for (std::size_t x = 0; x < U.size(); ++x) grad[x] = beta[k] * U[x];
    model_.components[k] = md_step(model_.components[k], grad, config_.gamma);
  }
  std::vector<double> member_grad(K);
  for (std::size_t k = 0; k < K; ++k) member_grad[k] = dot(model_.components[k], U);
  amd_step(amd_[i], member_grad, config_.gamma);
  model_.memberships[i] = amd_[i].beta;
}

EpochReport NMFTrainer::epoch() {
  const std::size_t n = data_.instances.size();
  const double T = model_.temperature;
  EpochReport rep;
  rep.epoch = model_.epoch + 1;
  rep.T = T;
  rep.instance_V.assign(n, 0.0);
  rep.instance_sweeps.assign(n, 0);

  if (config_.batch) {
    std::vector<std::vector<double>> grads(n);
    for (std::size_t i = 0; i < n; ++i) {
      refresh_mixed(i);
      chain(i);
    }
    parallel_for(n, [&](std::size_t i) {
      MixReport mix;
      grads[i] = oracle_step(i, T, &mix);
      rep.instance_V[i] = mix.final_V;
      rep.instance_sweeps[i] = mix.sweeps_used;
    });
    for (std::size_t i = 0; i < n; ++i) apply_update(i, grads[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      refresh_mixed(i);
      MixReport mix;
      const auto U = oracle_step(i, T, &mix);
      rep.instance_V[i] = mix.final_V;
      rep.instance_sweeps[i] = mix.sweeps_used;
      apply_update(i, U);
    }
  }
  for (std::size_t i = 0; i < n; ++i) refresh_mixed(i);

  rep.objective_proxy = std::accumulate(rep.instance_V.begin(), rep.instance_V.end(), 0.0);
  rep.sweeps_total = std::accumulate(rep.instance_sweeps.begin(), rep.instance_sweeps.end(),
                                     std::size_t{0});
  model_.temperature = T * decay_;
  model_.epoch = rep.epoch;
  if (config_.exact_every > 0 &&
      (rep.epoch == 1 || rep.epoch % config_.exact_every == 0 || rep.epoch == config_.epochs)) {
    rep.exact_objective = exact_objective();
  }
  return rep;
}

double NMFTrainer::exact_objective() const {
  double total = 0.0;
  for (std::size_t i = 0; i < data_.instances.size(); ++i) {
    const auto w = mixed_weights(model_, i);
    total += solve_exact(w.weights, data_.instances[i].weights, costs_[i]).cost;
  }
  return total;
}

FitResult fit(const NMFDataset& data, const TrainConfig& config) {
  NMFTrainer trainer(data, config);
  FitResult out;
  for (std::size_t e = 0; e < config.epochs; ++e) out.trace.push_back(trainer.epoch());
  out.model = trainer.model();
  return out;
}

}  // namespace gibbs_ot
