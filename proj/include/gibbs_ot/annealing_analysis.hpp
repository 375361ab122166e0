#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gibbs_ot/gibbs_sampler.hpp"

namespace gibbs_ot {

// Finite-time analysis of the z-chain z^1, z^2, ... where z^{2t-1} = (L^t, U^{t-1})
// is the state after the L half-step of sweep t and z^{2t} = (L^t, U^t) the
// state after its U half-step. T^{(n)} denotes the temperature of half-step n;
// its exponential draws drive the transition z^n -> z^{n+1}:
//   odd n:  h drawn at T^{(n)}, next U_i is a min of shifted exponentials;
//   even n: g drawn at T^{(n)}, next L_j is a max of reversed exponentials.

/// Parity of the half-step whose drift is evaluated. `odd` means the next
/// transition refreshes U (psi statistics), `even` means it refreshes L (phi).
enum class Half { odd, even };

/// n independent reversed exponentials e_i with c.d.f. min{exp(w_i (x - z_i)), 1}.
struct MaxExpSpec {
  std::vector<double> endpoints;
  std::vector<double> rates;
};

/// E[max_i e_i] in closed form (sorts internally).
double max_exp_expectation(const MaxExpSpec& spec);

struct AuxStatistic {
  double value = 0.0;    // phi_j or psi_i, dimensionless
  std::size_t index = 0; // I_j or J_i
};

/// phi_j with E[L_j | U] = U_{I_j} - M_{I_j, j} - phi_j T.
AuxStatistic compute_phi(std::span<const double> U, std::span<const double> cost_col,
                         std::span<const double> p, double T);
/// psi_i with E[U_i | L] = M_{i, J_i} + L_{J_i} + psi_i T.
AuxStatistic compute_psi(std::span<const double> L, std::span<const double> cost_row,
                         std::span<const double> q, double T);

/// R(x; w) = sum_i w_i x_i - min_i x_i.
double regret(std::span<const double> x, std::span<const double> w);

struct SweepStats {
  std::vector<double> phi;       // length m2
  std::vector<double> psi;       // length m1
  std::vector<std::size_t> I;    // argmax rows, length m2
  std::vector<std::size_t> J;    // argmin cols, length m1
  double C_odd = 0.0;            // <psi, p>
  double C_even = 0.0;           // <phi, q>
  double D_odd = 0.0;            // sum_i p_i R(M_i. + L; q)
  double D_even = 0.0;           // sum_j q_j R(M_.j - U; p)
};

SweepStats concentration_ingredients(const ZView& z, double T);

/// E[V(z^{n+1}) - V(z^n) | z^n] when the driving draws use temperature T.
double expected_drift(const ZView& z, double T, Half half);

/// Sum of the T-independent slack terms of expected_drift; always <= 0 for
/// states produced by the sampler.
double drift_slack(const ZView& z, Half half);

/// The temperature at which expected_drift vanishes, found by bisection
/// (phi and psi depend on T). Zero when the slack is zero.
double critical_temperature(const ZView& z, Half half);

/// Martingale residual r^n = V(z^n) - sum_{s<n} O(z^s, T^{(s)}).
///
/// Construct it on the state after some half-step (that state is z^1) with the
/// temperature that half-step ran at: its draws drive z^1 -> z^2. Call update()
/// after every subsequent half-step with the temperature that half-step ran at.
class ResidualTracker {
 public:
  ResidualTracker(const GibbsChain& chain, double T);

  void update(const GibbsChain& chain, double T, Half half);

  double r() const { return r_; }
  std::size_t n() const { return n_; }
  double drift_sum() const { return drift_sum_; }
  /// r^{n-1} - r^n for the latest update.
  double last_drop() const { return last_drop_; }
  /// C^{n-1} T^{(n-1)} for the latest update.
  double last_left_bound() const { return last_left_bound_; }

 private:
  std::size_t n_ = 1;
  std::uint64_t half_steps_ = 0;
  double r_ = 0.0;
  double drift_sum_ = 0.0;
  double last_drop_ = 0.0;
  double last_left_bound_ = 0.0;
  double prev_T_ = 0.0;
  std::vector<double> prev_U_, prev_L_;
};

struct BoundQuery {
  std::vector<double> a;  // a_1 .. a_{2N-1}
  double K = 1.0;
  double gamma = 1.0;
  double epsilon = 0.5;
};

struct BoundReport {
  double left_prob = 0.0;
  double right_prob = 0.0;      // min(raw, 1)
  double right_prob_raw = 0.0;
  std::vector<bool> condition_i;   // C^n T^n <= a_n
  std::vector<bool> condition_ii;  // log(2N max(m1,m2)/eps) T^n + D^n <= gamma a_n
};

/// Tail bounds for r^{2N} - r^1. `temperatures[n-1]` and `stats[n-1]` describe
/// half-step n; odd n use the *_odd ingredients, even n the *_even ones.
BoundReport evaluate_bounds(const BoundQuery& query, std::span<const double> temperatures,
                            std::span<const SweepStats> stats);

}  // namespace gibbs_ot
