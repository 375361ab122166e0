#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gibbs_ot/gibbs_sampler.hpp"
#include "gibbs_ot/ot_core.hpp"

namespace gibbs_ot {

/// Data measures Phi_i plus the fixed support x_1..x_m shared by all components.
struct NMFDataset {
  std::vector<DiscreteMeasure> instances;
  std::vector<Point> shared_support;
};

/// Components v^(k) on the shared support and memberships beta^(i).
struct NMFModel {
  std::vector<std::vector<double>> components;   // K x m
  std::vector<std::vector<double>> memberships;  // n x K
  std::vector<Point> shared_support;
  double temperature = 0.0;
  std::size_t epoch = 0;
};

struct TrainConfig {
  std::size_t K = 40;
  double gamma = 2.0;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::size_t tau = kDefaultMixLag;
  double initial_T = 0.0;        // <= 0: derived, see default_temperature()
  double eta = 0.5;
  std::size_t max_sweeps = 200;  // per oracle call
  double cost_power = 2.0;
  bool batch = false;            // oracles on the epoch-start model, then updates
  std::size_t exact_every = 5;   // exact-W checkpoints; 0 disables
};

struct EpochReport {
  std::size_t epoch = 0;
  double T = 0.0;  // temperature the oracles ran at
  double objective_proxy = 0.0;
  std::optional<double> exact_objective;
  std::size_t sweeps_total = 0;
  std::vector<double> instance_V;
  std::vector<std::size_t> instance_sweeps;
};

/// Entropic mirror-descent step on the simplex: v'_i ∝ v_i exp(-gamma grad_i).
std::vector<double> md_step(std::span<const double> v, std::span<const double> grad, double gamma);

/// Accelerated mirror descent in the entropic geometry with gradient restart.
struct AmdState {
  std::vector<double> beta;  // current iterate
  std::vector<double> z;     // dual-averaging sequence
  std::size_t k = 0;         // iterations since the last restart

  static AmdState start(std::vector<double> beta0);
};

void amd_step(AmdState& state, std::span<const double> grad, double gamma);

/// Sum_k beta_k^(i) v^(k), floored like every measure fed to the oracle.
DiscreteMeasure mixed_weights(const NMFModel& model, std::size_t i);

/// Seeded initialization: positive random components, uniform memberships.
NMFModel initial_model(const NMFDataset& data, const TrainConfig& config);

/// Wasserstein NMF driven by warm-started Gibbs-OT oracles, one chain per
/// instance. Not copyable: chains reference buffers owned by the trainer.
class NMFTrainer {
 public:
  NMFTrainer(const NMFDataset& data, TrainConfig config);
  NMFTrainer(const NMFDataset& data, TrainConfig config, NMFModel model);
  NMFTrainer(const NMFTrainer&) = delete;
  NMFTrainer& operator=(const NMFTrainer&) = delete;

  /// Warm-started oracle for instance i at temperature T; returns U_i.
  std::vector<double> oracle_step(std::size_t i, double T, MixReport* report = nullptr);

  /// One pass over all instances followed by the temperature update.
  EpochReport epoch();

  /// Sum_i W(Phi_hat_i, Phi_i) with the exact solver.
  double exact_objective() const;

  const NMFModel& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  double decay_factor() const { return decay_; }
  const Matrix& instance_cost(std::size_t i) const { return costs_[i]; }
  std::size_t instances() const { return data_.instances.size(); }

 private:
  void refresh_mixed(std::size_t i);
  GibbsChain& chain(std::size_t i);
  double default_temperature();
  void apply_update(std::size_t i, std::span<const double> U);

  const NMFDataset& data_;
  TrainConfig config_;
  NMFModel model_;
  std::vector<Matrix> costs_;
  std::vector<std::vector<double>> mixed_;
  std::vector<std::optional<GibbsChain>> chains_;
  std::vector<AmdState> amd_;
  double decay_ = 1.0;
};

struct FitResult {
  NMFModel model;
  std::vector<EpochReport> trace;
};

FitResult fit(const NMFDataset& data, const TrainConfig& config);

}  // namespace gibbs_ot
