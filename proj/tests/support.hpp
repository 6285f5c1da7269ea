#pragma once

// Helpers shared by the unit tests: compact matrix literals and seeded
// random generators for property checks.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "peninsula/model.hpp"

namespace support {

using namespace peninsula;

inline std::vector<VantagePoint> make_vps(std::size_t n) {
  std::vector<VantagePoint> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"v" + std::to_string(i), std::string(kUnknownCountry)});
  return out;
}

inline BlockId block(std::uint32_t i) { return BlockId(Ipv4Addr{(10u << 24) | (i << 8)}); }

inline ReachState state_of(char c) {
  switch (c) {
    case 'U': return ReachState::Up;
    case 'D': return ReachState::Down;
    default: return ReachState::Unknown;
  }
}

// cells[b][r] is one character per VP: U, D or '?'.
inline RoundMatrix matrix_from(std::vector<VantagePoint> vps, const std::vector<std::vector<std::string>>& cells) {
  std::vector<BlockId> blocks;
  for (std::uint32_t b = 0; b < cells.size(); ++b) blocks.push_back(block(b));
  const auto rounds = cells.empty() ? 0 : cells.front().size();
  RoundMatrixBuilder builder(std::move(vps), blocks, rounds);
  for (std::size_t b = 0; b < cells.size(); ++b) {
    for (std::size_t r = 0; r < cells[b].size(); ++r) {
      for (std::size_t v = 0; v < cells[b][r].size(); ++v) builder.set(b, r, v, state_of(cells[b][r][v]));
    }
  }
  return std::move(builder).build();
}

inline RoundMatrix random_matrix(std::mt19937_64& rng, std::size_t nvp, std::size_t nb, std::size_t nr,
                                 double p_unknown = 0.1, double p_up = 0.6) {
  std::vector<BlockId> blocks;
  for (std::uint32_t b = 0; b < nb; ++b) blocks.push_back(block(b));
  RoundMatrixBuilder builder(make_vps(nvp), blocks, nr);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t v = 0; v < nvp; ++v) {
        const double x = u(rng);
        builder.set(b, r, v, x < p_unknown ? ReachState::Unknown : (u(rng) < p_up ? ReachState::Up : ReachState::Down));
      }
    }
  }
  return std::move(builder).build();
}

}  // namespace support
