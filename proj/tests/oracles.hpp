#pragma once

// Reference computations used only by the tests. Nothing here calls into the
// library's solvers or analysis code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "gibbs_ot/matrix.hpp"

namespace oracle {

using gibbs_ot::Matrix;

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> A,
                                                       std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-12) return std::nullopt;
    std::swap(A[piv], A[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= A[c][k] * x[k];
    x[c] = s / A[c][c];
  }
  return x;
}

/// Transportation LP optimum by enumerating every basic solution: choose
/// m1 + m2 - 1 cells, solve the marginal equations (one redundant row
/// dropped), keep the nonnegative ones. Exponential, for m1, m2 <= 4.
inline double brute_force_ot(const std::vector<double>& p, const std::vector<double>& q,
                             const Matrix& M) {
  const std::size_t m1 = p.size(), m2 = q.size(), cells = m1 * m2, k = m1 + m2 - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == k) {
      // rows 0..m1-1, then columns 0..m2-2 (last column equation dropped)
      std::vector<std::vector<double>> A(k, std::vector<double>(k, 0.0));
      std::vector<double> b(k);
      for (std::size_t i = 0; i < m1; ++i) b[i] = p[i];
      for (std::size_t j = 0; j + 1 < m2; ++j) b[m1 + j] = q[j];
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t i = pick[c] / m2, j = pick[c] % m2;
        A[i][c] = 1.0;
        if (j + 1 < m2) A[m1 + j][c] = 1.0;
      }
      const auto x = solve_linear(A, b);
      if (!x) return;
      double last = 0.0, cost = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        if ((*x)[c] < -1e-12) return;
        if (pick[c] % m2 == m2 - 1) last += (*x)[c];
        cost += (*x)[c] * M(pick[c] / m2, pick[c] % m2);
      }
      if (std::abs(last - q[m2 - 1]) > 1e-9) return;
      best = std::min(best, cost);
      return;
    }
    for (std::size_t c = start; c + (k - depth) <= cells; ++c) {
      pick[depth] = c;
      rec(c + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

/// E[max_i e_i] for reversed exponentials with P(e_i <= x) = min(exp(w_i (x - z_i)), 1),
/// via E[X] = z_max - int_{-inf}^{z_max} F(x) dx and adaptive Simpson.
inline double max_exp_quadrature(const std::vector<double>& z, const std::vector<double>& w) {
  const double top = *std::max_element(z.begin(), z.end());
  auto F = [&](double x) {
    double f = 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) f *= std::min(std::exp(w[i] * (x - z[i])), 1.0);
    return f;
  };
  const double wmin = *std::min_element(w.begin(), w.end());
  const double zmin = *std::min_element(z.begin(), z.end());
  const double lo = zmin - 60.0 / wmin;  // F(lo) < e^-60
  std::function<double(double, double, double, double, double, double, int)> simpson =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = F(lm), frm = F(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (depth <= 0 || std::abs(left + right - whole) < 1e-14 * (b - a) + 1e-15)
          return left + right + (left + right - whole) / 15.0;
        return simpson(a, m, fa, flm, fm, left, depth - 1) + simpson(m, b, fm, frm, fb, right, depth - 1);
      };
  // split at every endpoint: F has kinks there
  std::vector<double> knots{lo};
  for (double v : z) knots.push_back(v);
  std::sort(knots.begin(), knots.end());
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double a = knots[k], b = knots[k + 1];
    if (b <= a) continue;
    const double fa = F(a), fb = F(b), fm = F(0.5 * (a + b));
    integral += simpson(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 40);
  }
  return top - integral;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

class Accumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  Moments moments() const {
    const double var = n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    return {mean_, std::sqrt(var / static_cast<double>(n_))};
  }
  std::size_t count() const { return n_; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

/// Next L given U: g_i = U_i - theta_i T / p_i, L_j = max_i (g_i - M_ij).
inline std::vector<double> simulate_L(const std::vector<double>& U, const std::vector<double>& p,
                                      const Matrix& M, double T, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> g(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) g[i] = U[i] - exp1(rng) * T / p[i];
  std::vector<double> L(M.cols(), -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < M.cols(); ++j)
    for (std::size_t i = 0; i < M.rows(); ++i) L[j] = std::max(L[j], g[i] - M(i, j));
  return L;
}

/// Next U given L: h_j = L_j + theta_j T / q_j, U_i = min_j (M_ij + h_j).
inline std::vector<double> simulate_U(const std::vector<double>& L, const std::vector<double>& q,
                                      const Matrix& M, double T, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> h(L.size());
  for (std::size_t j = 0; j < L.size(); ++j) h[j] = L[j] + exp1(rng) * T / q[j];
  std::vector<double> U(M.rows(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j) U[i] = std::min(U[i], M(i, j) + h[j]);
  return U;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace oracle
