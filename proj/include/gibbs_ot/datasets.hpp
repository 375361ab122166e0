#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gibbs_ot/matrix.hpp"
#include "gibbs_ot/ot_core.hpp"
#include "gibbs_ot/wlm_nmf.hpp"

namespace gibbs_ot::datasets {

/// x_i = (i + 0.5) / N.
std::vector<double> unit_grid(std::size_t N);
std::vector<Point> as_points(const std::vector<double>& xs);

struct Problem {
  DiscreteMeasure p, q;
  CostMatrix cost;
};

/// Two-mode densities on the N-point grid: mixtures of two truncated
/// Gaussians (means 0.25/0.75, std 0.08 vs means 0.35/0.65, std 0.06),
/// squared Euclidean cost. A stand-in, the original densities are unknown.
Problem toy1d(std::size_t N = 64);

/// Uniform weights, Coulomb cost with cap 2N.
Problem coulomb1d(std::size_t N = 64);

/// Random weights in (0,1] normalized, costs uniform in [0,1). Seeded.
Problem random_problem(std::size_t m1, std::size_t m2, std::uint64_t seed);

/// Deterministic per-seed corpus of side x side two-blob rasters. Image i is
/// alpha_i * blob(A) + (1 - alpha_i) * blob(B) with alpha_i uniform in
/// [0.1, 0.9].
std::vector<std::vector<double>> two_blob_rasters(std::size_t count, std::size_t side,
                                                  std::uint64_t seed);

/// The rasters above as an NMF dataset on the shared pixel grid.
NMFDataset synthetic_nmf(std::size_t count = 20, std::size_t side = 8, std::uint64_t seed = 1);

}  // namespace gibbs_ot::datasets
