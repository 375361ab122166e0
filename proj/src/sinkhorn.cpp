#include "gibbs_ot/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gibbs_ot {
namespace {

double log_sum_exp(const std::vector<double>& x) {
  const double c = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(c)) return c;
  double s = 0.0;
  for (double v : x) s += std::exp(v - c);
  return c + std::log(s);
}

}  // namespace

SinkhornResult sinkhorn(std::span<const double> p, std::span<const double> q, const Matrix& cost,
                        const SinkhornConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (!(config.tol > 0.0)) throw std::invalid_argument("sinkhorn: tol must be positive");
  if (p.empty() || q.empty() || cost.rows() != p.size() || cost.cols() != q.size())
    throw std::invalid_argument("sinkhorn: dimension mismatch");

  const std::size_t m1 = p.size(), m2 = q.size();
  const double eps = config.epsilon;
  std::vector<double> f(m1, 0.0), g(m2, 0.0);
  std::vector<double> log_p(m1), log_q(m2);
  for (std::size_t i = 0; i < m1; ++i) log_p[i] = std::log(p[i]);
  for (std::size_t j = 0; j < m2; ++j) log_q[j] = std::log(q[j]);

  std::vector<double> row_buf(m2), col_buf(m1);
  SinkhornResult result;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < config.max_iters) {
    ++it;
    for (std::size_t i = 0; i < m1; ++i) {
      const auto row = cost.row(i);
      for (std::size_t j = 0; j < m2; ++j) row_buf[j] = (g[j] - row[j]) / eps;
      f[i] = eps * (log_p[i] - log_sum_exp(row_buf));
    }
    for (std::size_t j = 0; j < m2; ++j) {
      for (std::size_t i = 0; i < m1; ++i) col_buf[i] = (f[i] - cost(i, j)) / eps;
      g[j] = eps * (log_q[j] - log_sum_exp(col_buf));
    }
    // Columns are exact after the g-projection; measure the rows.
    residual = 0.0;
    for (std::size_t i = 0; i < m1; ++i) {
      const auto row = cost.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < m2; ++j) s += std::exp((f[i] + g[j] - row[j]) / eps);
      residual = std::max(residual, std::abs(s - p[i]));
    }
    if (residual <= config.tol) {
      result.converged = true;
      break;
    }
  }

  Matrix plan(m1, m2);
  for (std::size_t i = 0; i < m1; ++i) {
    const auto row = cost.row(i);
    for (std::size_t j = 0; j < m2; ++j) plan(i, j) = std::exp((f[i] + g[j] - row[j]) / eps);
  }
  result.plan = TransportPlan::from_dense(std::move(plan), PlanSource::sinkhorn);
  const auto [r, c] = marginal_residual(result.plan, p, q);
  result.residual = std::max(r, c);
  result.iterations_used = it;
  return result;
}

}  // namespace gibbs_ot
