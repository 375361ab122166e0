#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gibbs_ot/matrix.hpp"
#include "gibbs_ot/ot_core.hpp"
#include "gibbs_ot/random.hpp"
#include "gibbs_ot/schedule.hpp"

namespace gibbs_ot {

/// Dual state of one Gibbs-OT chain.
///
/// g, h are the sampled potentials; U, L are the min/max envelopes
///   U_i = min_j (M_ij + h_j),   L_j = max_i (g_i - M_ij)
/// refreshed by the half-step that resamples the matching potential. The
/// pair (U, L) is the auxiliary z-chain that carries the energy V(z) and the
/// gradient pair.
struct ChainState {
  std::vector<double> g, h, U, L;
  std::uint64_t half_steps = 0;  // completed half-steps; also the RNG step index
  RngKey rng;

  std::uint64_t sweeps() const { return half_steps / 2; }
  bool operator==(const ChainState&) const = default;
};

/// Non-owning view of the quantities the z-chain analysis needs.
struct ZView {
  std::span<const double> p, q;
  const Matrix* cost = nullptr;
  std::span<const double> U, L;
};

/// One row of a sampler trace.
struct TraceRecord {
  std::uint64_t n = 0;  // sweep index
  double T = 0.0;
  double V_z = 0.0;
  double V_gh = 0.0;
  double feas = 0.0;
};

struct MixReport {
  bool mixed = false;
  std::size_t sweeps_used = 0;
  double final_V = 0.0;
  std::vector<TraceRecord> trace;
};

inline constexpr std::size_t kDefaultMixLag = 5;

/// The Gibbs sampler over dual potentials of one OT problem.
///
/// The chain reads p, q and M through spans; the caller keeps them alive and
/// may swap the marginals between runs (warm start) with rebind_marginals().
/// Temperatures must be >= 0; T == 0 is the formal zero-temperature limit in
/// which the half-steps become deterministic Bellman updates.
class GibbsChain {
 public:
  /// Fresh chain: g = h = 0 with U, L consistent with them.
  GibbsChain(std::span<const double> p, std::span<const double> q, const Matrix& cost,
             std::uint64_t seed, std::uint64_t chain_id = 0);
  /// Resumes a saved state.
  GibbsChain(std::span<const double> p, std::span<const double> q, const Matrix& cost,
             ChainState state);

  /// L_j := max_i (g_i - M_ij); h_j := L_j + theta_j T / q_j.
  void half_step_L(double T);
  void half_step_L(double T, std::span<const double> theta);
  /// U_i := min_j (M_ij + h_j); g_i := U_i - theta_i T / p_i (every i, g_1 included).
  void half_step_U(double T);
  void half_step_U(double T, std::span<const double> theta);
  /// half_step_L(T_odd) followed by half_step_U(T_even).
  void sweep(double T_odd, double T_even);

  /// <p, U> - <q, L>.
  double energy_z() const;
  /// <p, g> - <q, h>.
  double energy_gh() const;
  /// max_ij (g_i - h_j - M_ij); <= 0 means (g, h) is dual feasible.
  double dual_feasibility_residual() const;

  /// (m1 + m2)-sparse plan 1/2 sum_i p_i e_{i, J_i} + 1/2 sum_j q_j e_{I_j, j}
  /// with J_i = argmin_j (M_ij + L_j) and I_j = argmax_i (U_i - M_ij).
  /// Requires at least one completed sweep.
  TransportPlan recover_plan() const;

  /// Constant-temperature sweeps until V(z) stops increasing over a lag of
  /// `tau` sweeps, or `max_sweeps` is reached.
  MixReport run_until_mixed(double T, std::size_t tau, std::size_t max_sweeps);

  /// (U, -L): inexact subgradients of the loss w.r.t. p and q.
  std::pair<std::vector<double>, std::vector<double>> gradient_pair() const;

  /// Replaces the marginals (same dimensions) without touching the state.
  void rebind_marginals(std::span<const double> p, std::span<const double> q);

  TraceRecord snapshot(double T) const;

  const ChainState& state() const { return state_; }
  ZView z_view() const { return {p_, q_, cost_, state_.U, state_.L}; }
  std::span<const double> p() const { return p_; }
  std::span<const double> q() const { return q_; }
  const Matrix& cost() const { return *cost_; }
  std::size_t rows() const { return p_.size(); }
  std::size_t cols() const { return q_.size(); }

 private:
  void check_dimensions() const;
  void update_L(double T, const double* theta);
  void update_U(double T, const double* theta);

  std::span<const double> p_, q_;
  const Matrix* cost_;
  ChainState state_;
};

/// init_chain from the operation list; equivalent to the fresh-chain constructor.
inline GibbsChain init_chain(std::span<const double> p, std::span<const double> q,
                             const Matrix& cost, std::uint64_t seed,
                             std::uint64_t chain_id = 0) {
  return GibbsChain(p, q, cost, seed, chain_id);
}

/// Runs `sweeps` sweeps drawing temperatures from `schedule` (both halves of a
/// sweep share the temperature). Adaptive schedules consult the chain's
/// critical temperature before each sweep. `on_sweep` sees every record.
std::vector<TraceRecord> anneal(GibbsChain& chain, TemperatureSchedule& schedule,
                                std::size_t sweeps,
                                const std::function<void(const TraceRecord&)>& on_sweep = {});

}  // namespace gibbs_ot
