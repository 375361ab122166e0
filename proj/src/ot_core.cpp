#include "gibbs_ot/ot_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gibbs_ot {

DiscreteMeasure make_measure(std::span<const double> raw_weights,
                             std::optional<std::vector<Point>> support) {
  if (raw_weights.empty()) throw std::invalid_argument("make_measure: empty weight vector");
  double total = 0.0;
  for (std::size_t i = 0; i < raw_weights.size(); ++i) {
    const double w = raw_weights[i];
    if (!std::isfinite(w)) {
      throw std::invalid_argument("make_measure: non-finite weight at index " +
                                  std::to_string(i));
    }
    if (w < 0.0) {
      throw std::invalid_argument("make_measure: negative weight at index " +
                                  std::to_string(i));
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("make_measure: weights sum to zero");
  if (support && support->size() != raw_weights.size()) {
    throw std::invalid_argument("make_measure: support has " +
                                std::to_string(support->size()) + " points for " +
                                std::to_string(raw_weights.size()) + " weights");
  }

  DiscreteMeasure out;
  out.weights.resize(raw_weights.size());
  double floored_total = 0.0;
  for (std::size_t i = 0; i < raw_weights.size(); ++i) {
    out.weights[i] = std::max(raw_weights[i] / total, kWeightFloor);
    floored_total += out.weights[i];
  }
  for (double& w : out.weights) w /= floored_total;
  out.support = std::move(support);
  return out;
}

CostMatrix custom_cost(Matrix entries) {
  for (std::size_t i = 0; i < entries.rows(); ++i) {
    for (std::size_t j = 0; j < entries.cols(); ++j) {
      const double c = entries(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        throw std::invalid_argument("cost entry (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ") is negative or not finite");
      }
    }
  }
  return CostMatrix{std::move(entries), CostKind::custom, 0.0};
}

CostMatrix euclidean_cost(std::span<const Point> xs, std::span<const Point> ys, double power) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("euclidean_cost: empty point set");
  if (!(power > 0.0)) throw std::invalid_argument("euclidean_cost: power must be positive");
  const std::size_t d = xs.front().size();
  auto check = [d](std::span<const Point> pts, const char* name) {
    for (const auto& pt : pts) {
      if (pt.size() != d) {
        throw std::invalid_argument(std::string("euclidean_cost: dimension mismatch in ") + name);
      }
    }
  };
  check(xs, "xs");
  check(ys, "ys");

  Matrix m(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xs[i][k] - ys[j][k];
        sq += diff * diff;
      }
      // Avoid pow(sqrt(x), 2) round-off for the common squared case.
      m(i, j) = power == 2.0 ? sq : std::pow(std::sqrt(sq), power);
    }
  }
  return CostMatrix{std::move(m), CostKind::euclidean, power};
}

CostMatrix coulomb_cost(std::span<const double> xs, std::span<const double> ys, double cap) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("coulomb_cost: empty point set");
  if (!(cap > 0.0)) throw std::invalid_argument("coulomb_cost: cap must be positive");
  Matrix m(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double dist = std::abs(xs[i] - ys[j]);
      m(i, j) = dist == 0.0 ? cap : std::min(1.0 / dist, cap);
    }
  }
  return CostMatrix{std::move(m), CostKind::coulomb, cap};
}

TransportPlan TransportPlan::from_dense(Matrix m, PlanSource source) {
  TransportPlan plan;
  plan.rows = m.rows();
  plan.cols = m.cols();
  plan.is_sparse = false;
  plan.dense = std::move(m);
  plan.source = source;
  return plan;
}

TransportPlan TransportPlan::from_triples(std::size_t rows, std::size_t cols,
                                          std::vector<PlanEntry> triples, PlanSource source) {
  for (const auto& e : triples) {
    if (e.row >= rows || e.col >= cols) {
      throw std::invalid_argument("TransportPlan: triple index (" + std::to_string(e.row) +
                                  ", " + std::to_string(e.col) + ") outside shape");
    }
    if (!(e.mass >= 0.0)) throw std::invalid_argument("TransportPlan: negative mass");
  }
  TransportPlan plan;
  plan.rows = rows;
  plan.cols = cols;
  plan.is_sparse = true;
  plan.triples = std::move(triples);
  plan.source = source;
  return plan;
}

Matrix TransportPlan::to_dense() const {
  if (!is_sparse) return dense;
  Matrix m(rows, cols);
  for (const auto& e : triples) m(e.row, e.col) += e.mass;
  return m;
}

std::vector<PlanEntry> TransportPlan::to_triples() const {
  if (is_sparse) return triples;
  std::vector<PlanEntry> out;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (dense(i, j) != 0.0) out.push_back({i, j, dense(i, j)});
  return out;
}

double TransportPlan::total_mass() const {
  if (is_sparse) {
    double s = 0.0;
    for (const auto& e : triples) s += e.mass;
    return s;
  }
  return std::accumulate(dense.data().begin(), dense.data().end(), 0.0);
}

double transport_cost(const TransportPlan& plan, const Matrix& cost) {
  if (plan.rows != cost.rows() || plan.cols != cost.cols())
    throw std::invalid_argument("transport_cost: plan and cost shapes differ");
  double total = 0.0;
  if (plan.is_sparse) {
    for (const auto& e : plan.triples) total += e.mass * cost(e.row, e.col);
  } else {
    for (std::size_t i = 0; i < plan.rows; ++i)
      for (std::size_t j = 0; j < plan.cols; ++j) total += plan.dense(i, j) * cost(i, j);
  }
  return total;
}

double transport_cost(const TransportPlan& plan, const CostMatrix& cost) {
  return transport_cost(plan, cost.entries);
}

std::pair<double, double> marginal_residual(const TransportPlan& plan,
                                            std::span<const double> p,
                                            std::span<const double> q) {
  if (plan.rows != p.size() || plan.cols != q.size())
    throw std::invalid_argument("marginal_residual: plan shape does not match marginals");
  std::vector<double> row_sum(plan.rows, 0.0), col_sum(plan.cols, 0.0);
  for (const auto& e : plan.to_triples()) {
    row_sum[e.row] += e.mass;
    col_sum[e.col] += e.mass;
  }
  double r = 0.0, c = 0.0;
  for (std::size_t i = 0; i < plan.rows; ++i) r = std::max(r, std::abs(row_sum[i] - p[i]));
  for (std::size_t j = 0; j < plan.cols; ++j) c = std::max(c, std::abs(col_sum[j] - q[j]));
  return {r, c};
}

}  // namespace gibbs_ot
