#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gibbs_ot/matrix.hpp"

namespace gibbs_ot {

using Point = std::vector<double>;

/// Smallest weight a measure may carry after ingestion.
inline constexpr double kWeightFloor = 1e-9;

/// A probability vector on the simplex, optionally tagged with support points.
struct DiscreteMeasure {
  std::vector<double> weights;
  std::optional<std::vector<Point>> support;

  std::size_t size() const { return weights.size(); }
};

/// Normalizes raw nonnegative masses onto the simplex. Entries are floored at
/// kWeightFloor after normalization and the vector is renormalized, so every
/// weight is strictly positive.
DiscreteMeasure make_measure(std::span<const double> raw_weights,
                             std::optional<std::vector<Point>> support = std::nullopt);

enum class CostKind { euclidean, coulomb, custom };

struct CostMatrix {
  Matrix entries;
  CostKind kind = CostKind::custom;
  double parameter = 0.0;  // power for euclidean, cap for coulomb

  std::size_t rows() const { return entries.rows(); }
  std::size_t cols() const { return entries.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
};

/// Wraps a user-provided matrix; rejects negative or non-finite entries.
CostMatrix custom_cost(Matrix entries);

/// entries[i][j] = ||xs[i] - ys[j]||^power.
CostMatrix euclidean_cost(std::span<const Point> xs, std::span<const Point> ys, double power);

/// entries[i][j] = min(1 / |xs[i] - ys[j]|, cap); coincident points get cap.
CostMatrix coulomb_cost(std::span<const double> xs, std::span<const double> ys, double cap);

enum class PlanSource { exact, gibbs_recovered, sinkhorn };

struct PlanEntry {
  std::size_t row;
  std::size_t col;
  double mass;
};

/// A coupling. Exactly one of `dense` / `triples` is the primary storage,
/// signalled by `is_sparse`; `to_dense` and `to_triples` convert either way.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_sparse = false;
  Matrix dense;
  std::vector<PlanEntry> triples;
  PlanSource source = PlanSource::exact;

  static TransportPlan from_dense(Matrix m, PlanSource source);
  static TransportPlan from_triples(std::size_t rows, std::size_t cols,
                                    std::vector<PlanEntry> triples, PlanSource source);

  Matrix to_dense() const;
  std::vector<PlanEntry> to_triples() const;
  double total_mass() const;
};

struct ExactSolution {
  double cost = 0.0;
  TransportPlan plan;
  std::vector<double> dual_g;
  std::vector<double> dual_h;
  std::size_t pivots = 0;
};

/// Solves the transportation LP exactly with the transportation simplex.
/// Throws NumericalError if the pivot cap is exceeded.
ExactSolution solve_exact(const DiscreteMeasure& p, const DiscreteMeasure& q,
                          const CostMatrix& cost);
ExactSolution solve_exact(std::span<const double> p, std::span<const double> q,
                          const Matrix& cost);

/// Sum_ij Z_ij M_ij.
double transport_cost(const TransportPlan& plan, const CostMatrix& cost);
double transport_cost(const TransportPlan& plan, const Matrix& cost);

/// (max_i |row_sum_i - p_i|, max_j |col_sum_j - q_j|).
std::pair<double, double> marginal_residual(const TransportPlan& plan,
                                            std::span<const double> p,
                                            std::span<const double> q);

}  // namespace gibbs_ot
