#pragma once

#include <cstddef>
#include <span>

#include "gibbs_ot/matrix.hpp"
#include "gibbs_ot/ot_core.hpp"

namespace gibbs_ot {

struct SinkhornConfig {
  double epsilon = 0.01;      // regularization, cost units
  std::size_t max_iters = 1000;
  double tol = 1e-9;          // marginal residual threshold
};

struct SinkhornResult {
  TransportPlan plan;
  std::size_t iterations_used = 0;
  double residual = 0.0;      // max(row, col) marginal residual of `plan`
  bool converged = false;
};

/// Entropic OT by alternating Bregman projections onto the two marginal
/// constraints, run on log-scaling potentials throughout:
///   f_i = eps log p_i - eps LSE_j((g_j - M_ij) / eps)
///   g_j = eps log q_j - eps LSE_i((f_i - M_ij) / eps)
/// plan_ij = exp((f_i + g_j - M_ij) / eps). Non-convergence is reported, not
/// thrown.
SinkhornResult sinkhorn(std::span<const double> p, std::span<const double> q, const Matrix& cost,
                        const SinkhornConfig& config);

/// With two marginals iterative Bregman projection is exactly Sinkhorn.
inline SinkhornResult iterative_bregman_projection(std::span<const double> p,
                                                   std::span<const double> q,
                                                   const Matrix& cost,
                                                   const SinkhornConfig& config) {
  return sinkhorn(p, q, cost, config);
}

}  // namespace gibbs_ot
