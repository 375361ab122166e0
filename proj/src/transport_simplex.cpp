// Transportation simplex for the discrete OT linear program.
//
// The basis is a spanning tree over the m + n row/column nodes with exactly
// m + n - 1 basic cells (degenerate zero-flow cells included). Pricing uses
// Dantzig's most-negative reduced cost and falls back to Bland's rule after a
// run of degenerate pivots, which rules out cycling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "gibbs_ot/errors.hpp"
#include "gibbs_ot/ot_core.hpp"

namespace gibbs_ot {
namespace {

struct Cell {
  std::size_t row;
  std::size_t col;
};

class TransportationSimplex {
 public:
  TransportationSimplex(std::span<const double> p, std::span<const double> q, const Matrix& cost)
      : m_(p.size()), n_(q.size()), cost_(cost), adjacency_(m_ + n_) {
    double scale = 0.0;
    for (double c : cost.data()) scale = std::max(scale, std::abs(c));
    tol_ = 1e-12 * std::max(1.0, scale);
    northwest_corner(p, q);
  }

  ExactSolution solve() {
    const std::size_t cap = 50 * m_ * n_ + 1000;
    std::vector<double> u(m_), v(n_);
    std::size_t pivots = 0;
    std::size_t degenerate_run = 0;
    bool bland = false;

    for (;;) {
      rebuild_adjacency();
      compute_duals(u, v);
      const auto entering = price(u, v, bland);
      if (!entering) break;
      if (++pivots > cap) {
        throw NumericalError("solve_exact: pivot cap of " + std::to_string(cap) +
                             " exceeded on a " + std::to_string(m_) + "x" +
                             std::to_string(n_) + " instance");
      }
      const double theta = pivot(*entering);
      if (theta == 0.0) {
        if (++degenerate_run > std::max(m_, n_)) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }

    ExactSolution sol;
    Matrix plan(m_, n_);
    double total = 0.0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      plan(basis_[k].row, basis_[k].col) += flow_[k];
      total += flow_[k] * cost_(basis_[k].row, basis_[k].col);
    }
    sol.cost = total;
    sol.plan = TransportPlan::from_dense(std::move(plan), PlanSource::exact);
    sol.dual_g = u;
    sol.dual_h.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) sol.dual_h[j] = -v[j];
    sol.pivots = pivots;
    return sol;
  }

 private:
  void northwest_corner(std::span<const double> p, std::span<const double> q) {
    std::vector<double> a(p.begin(), p.end()), b(q.begin(), q.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      const double x = std::min(a[i], b[j]);
      basis_.push_back({i, j});
      flow_.push_back(x);
      a[i] -= x;
      b[j] -= x;
      if (i + 1 == m_ && j + 1 == n_) break;
      if (i + 1 == m_) {
        ++j;
      } else if (j + 1 == n_) {
        ++i;
      } else if (a[i] <= 0.0) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void rebuild_adjacency() {
    for (auto& adj : adjacency_) adj.clear();
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adjacency_[basis_[k].row].push_back(k);
      adjacency_[m_ + basis_[k].col].push_back(k);
    }
  }

  std::size_t other_end(std::size_t node, std::size_t edge) const {
    const Cell& c = basis_[edge];
    return node < m_ ? m_ + c.col : c.row;
  }

  // u_i + v_j = c_ij on every basic cell, anchored at u_0 = 0.
  void compute_duals(std::vector<double>& u, std::vector<double>& v) {
    std::vector<char> seen(m_ + n_, 0);
    stack_.assign(1, 0);
    seen[0] = 1;
    u[0] = 0.0;
    while (!stack_.empty()) {
      const std::size_t node = stack_.back();
      stack_.pop_back();
      for (std::size_t edge : adjacency_[node]) {
        const std::size_t next = other_end(node, edge);
        if (seen[next]) continue;
        seen[next] = 1;
        const Cell& c = basis_[edge];
        if (next >= m_) {
          v[c.col] = cost_(c.row, c.col) - u[c.row];
        } else {
          u[c.row] = cost_(c.row, c.col) - v[c.col];
        }
        stack_.push_back(next);
      }
    }
  }

  std::optional<Cell> price(const std::vector<double>& u, const std::vector<double>& v,
                            bool bland) const {
    std::optional<Cell> best;
    double best_d = -tol_;
    for (std::size_t i = 0; i < m_; ++i) {
      const auto row = cost_.row(i);
      for (std::size_t j = 0; j < n_; ++j) {
        const double d = row[j] - u[i] - v[j];
        if (d < best_d) {
          best = Cell{i, j};
          if (bland) return best;
          best_d = d;
        }
      }
    }
    return best;
  }

  // Adds `entering` to the basis, pushes flow around the unique cycle and
  // drops the blocking cell. Returns the step length.
  double pivot(Cell entering) {
    // Tree path from the entering row node to the entering column node.
    std::vector<std::size_t> parent_edge(m_ + n_, kNone);
    std::vector<char> seen(m_ + n_, 0);
    const std::size_t source = entering.row;
    const std::size_t target = m_ + entering.col;
    stack_.assign(1, source);
    seen[source] = 1;
    while (!stack_.empty() && !seen[target]) {
      const std::size_t node = stack_.back();
      stack_.pop_back();
      for (std::size_t edge : adjacency_[node]) {
        const std::size_t next = other_end(node, edge);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_edge[next] = edge;
        stack_.push_back(next);
      }
    }

    // Walking back from the column node, edges alternate -, +, -, ...
    std::vector<std::size_t> path;
    for (std::size_t node = target; node != source;) {
      const std::size_t edge = parent_edge[node];
      path.push_back(edge);
      node = other_end(node, edge);
    }

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const std::size_t edge = path[k];
      const double x = flow_[edge];
      if (x < theta || (x == theta && cell_index(basis_[edge]) < cell_index(basis_[leaving]))) {
        theta = x;
        leaving = edge;
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0) {
        flow_[path[k]] -= theta;
      } else {
        flow_[path[k]] += theta;
      }
    }
    flow_[leaving] = theta;  // reuse the slot for the entering cell
    basis_[leaving] = entering;
    return theta;
  }

  std::size_t cell_index(Cell c) const { return c.row * n_ + c.col; }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t m_, n_;
  const Matrix& cost_;
  double tol_ = 0.0;
  std::vector<Cell> basis_;
  std::vector<double> flow_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> stack_;
};

void check_marginal(std::span<const double> w, const char* name) {
  if (w.empty()) throw std::invalid_argument(std::string("solve_exact: empty ") + name);
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw std::invalid_argument(std::string("solve_exact: invalid weight in ") + name);
  }
}

}  // namespace

ExactSolution solve_exact(std::span<const double> p, std::span<const double> q,
                          const Matrix& cost) {
  check_marginal(p, "p");
  check_marginal(q, "q");
  if (cost.rows() != p.size() || cost.cols() != q.size()) {
    throw std::invalid_argument("solve_exact: cost is " + std::to_string(cost.rows()) + "x" +
                                std::to_string(cost.cols()) + " but marginals are " +
                                std::to_string(p.size()) + " and " + std::to_string(q.size()));
  }
  for (double c : cost.data())
    if (!std::isfinite(c)) throw std::invalid_argument("solve_exact: non-finite cost entry");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - sq) > 1e-9 * std::max(1.0, sp))
    throw std::invalid_argument("solve_exact: marginals carry different total mass");
  return TransportationSimplex(p, q, cost).solve();
}

ExactSolution solve_exact(const DiscreteMeasure& p, const DiscreteMeasure& q,
                          const CostMatrix& cost) {
  return solve_exact(p.weights, q.weights, cost.entries);
}

}  // namespace gibbs_ot
