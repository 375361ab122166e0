#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace gibbs_ot {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Stateless: output depends only on (counter, key).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Identifies one chain's random stream. Draws are addressed by
/// (seed, chain, step, coordinate), so a chain's trajectory does not depend on
/// the order in which coordinates or chains are evaluated.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;

  bool operator==(const RngKey&) const = default;

  /// Uniform double in the open interval (0, 1).
  double uniform(std::uint64_t step, std::uint64_t coord) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(coord), static_cast<std::uint32_t>(coord >> 32),
        static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
    // Fold the chain id into the key so that (seed, chain) pairs never share a
    // counter space.
    const std::uint64_t k = seed ^ (chain * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
    const auto out = philox4x32(ctr, {static_cast<std::uint32_t>(k),
                                      static_cast<std::uint32_t>(k >> 32)});
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 32 | out[1]) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Unit-rate exponential via inverse transform.
  double exponential(std::uint64_t step, std::uint64_t coord) const {
    return -std::log(uniform(step, coord));
  }
};

}  // namespace gibbs_ot
