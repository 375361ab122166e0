#include "gibbs_ot/datasets.hpp"

#include <cmath>
#include <stdexcept>

#include "gibbs_ot/io.hpp"
#include "gibbs_ot/random.hpp"

namespace gibbs_ot::datasets {
namespace {

// dataset streams live far from sampler chain ids
constexpr std::uint64_t kProblemStream = 0xD47A5E7000000000ull;

double gauss(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z);
}

std::vector<double> two_mode(const std::vector<double>& xs, double mu1, double mu2, double sd) {
  // truncation to [0,1] is implicit: the grid only covers [0,1]
  std::vector<double> w;
  w.reserve(xs.size());
  for (double x : xs) w.push_back(0.5 * gauss(x, mu1, sd) + 0.5 * gauss(x, mu2, sd));
  return w;
}

}  // namespace

std::vector<double> unit_grid(std::size_t N) {
  if (N == 0) throw std::invalid_argument("unit_grid: N must be positive");
  std::vector<double> xs(N);
  for (std::size_t i = 0; i < N; ++i) xs[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
  return xs;
}

std::vector<Point> as_points(const std::vector<double>& xs) {
  std::vector<Point> pts;
  pts.reserve(xs.size());
  for (double x : xs) pts.push_back({x});
  return pts;
}

Problem toy1d(std::size_t N) {
  const auto xs = unit_grid(N);
  const auto pts = as_points(xs);
  return {make_measure(two_mode(xs, 0.25, 0.75, 0.08), pts),
          make_measure(two_mode(xs, 0.35, 0.65, 0.06), pts), euclidean_cost(pts, pts, 2.0)};
}

Problem coulomb1d(std::size_t N) {
  const auto xs = unit_grid(N);
  const auto pts = as_points(xs);
  const std::vector<double> ones(N, 1.0);
  return {make_measure(ones, pts), make_measure(ones, pts),
          coulomb_cost(xs, xs, 2.0 * static_cast<double>(N))};
}

Problem random_problem(std::size_t m1, std::size_t m2, std::uint64_t seed) {
  if (m1 == 0 || m2 == 0) throw std::invalid_argument("random_problem: empty dimension");
  const RngKey key{seed, kProblemStream};
  std::vector<double> p(m1), q(m2);
  for (std::size_t i = 0; i < m1; ++i) p[i] = key.uniform(0, i);
  for (std::size_t j = 0; j < m2; ++j) q[j] = key.uniform(1, j);
  Matrix M(m1, m2);
  for (std::size_t i = 0; i < m1; ++i)
    for (std::size_t j = 0; j < m2; ++j) M(i, j) = key.uniform(2, i * m2 + j);
  return {make_measure(p), make_measure(q), custom_cost(std::move(M))};
}

std::vector<std::vector<double>> two_blob_rasters(std::size_t count, std::size_t side,
                                                  std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("two_blob_rasters: side must be at least 2");
  const double s = static_cast<double>(side);
  const double ar = 0.3 * s, ac = 0.3 * s;  // blob A, upper left
  const double br = 0.7 * s, bc = 0.65 * s; // blob B, lower right
  const double sd = 0.12 * s;
  const RngKey key{seed, kProblemStream + 1};
  std::vector<std::vector<double>> out;
  for (std::size_t n = 0; n < count; ++n) {
    const double alpha = 0.1 + 0.8 * key.uniform(n, 0);
    std::vector<double> px(side * side);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const double y = static_cast<double>(r) + 0.5, x = static_cast<double>(c) + 0.5;
        const double a = gauss(y, ar, sd) * gauss(x, ac, sd);
        const double b = gauss(y, br, sd) * gauss(x, bc, sd);
        px[r * side + c] = alpha * a + (1.0 - alpha) * b;
      }
    }
    out.push_back(std::move(px));
  }
  return out;
}

NMFDataset synthetic_nmf(std::size_t count, std::size_t side, std::uint64_t seed) {
  NMFDataset data;
  data.shared_support = io::pixel_grid(side, side);
  for (auto& px : two_blob_rasters(count, side, seed))
    data.instances.push_back(io::raster_to_measure({side, side, std::move(px)}));
  return data;
}

}  // namespace gibbs_ot::datasets
