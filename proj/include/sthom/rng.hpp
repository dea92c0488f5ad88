#pragma once

// Counter-based random numbers (Philox 4x64, 10 rounds).
//
// Every draw is a pure function of (seed, stream, ctr0, ctr1, slot), so
// parallel path generation is reproducible regardless of scheduling: path p,
// step k always sees the same Gaussian increments no matter which thread
// simulates it.

#include <array>
#include <cmath>
#include <cstdint>

namespace sthom::rng {

struct Block {
  std::array<std::uint64_t, 4> w{};
};

namespace detail {

inline void mul_hilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                     std::uint64_t& lo) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t kMult1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

}  // namespace detail

/// One Philox 4x64-10 block. Matches the reference key schedule: the key is
/// bumped between rounds, not after the last one.
inline Block philox4x64(std::array<std::uint64_t, 2> key,
                        std::array<std::uint64_t, 4> ctr) {
  using namespace detail;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    mul_hilo(kMult0, ctr[0], hi0, lo0);
    mul_hilo(kMult1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return Block{ctr};
}

/// Map 64 bits to [0,1) with 53-bit resolution.
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Map 64 bits to (0,1]; safe as a log() argument.
inline double to_unit_open(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

/// Independent N(0,1) pair addressed by (seed, stream, i, j).
inline std::array<double, 2> normal_pair(std::uint64_t seed,
                                         std::uint64_t stream, std::uint64_t i,
                                         std::uint64_t j) {
  const Block b = philox4x64({seed, stream}, {i, j, 0, 0});
  const double u1 = to_unit_open(b.w[0]);
  const double u2 = to_unit(b.w[1]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 6.283185307179586476925287 * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

/// Uniform [0,1) draw addressed by (seed, stream, i, j, slot), slot < 4.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t i,
                      std::uint64_t j, unsigned slot = 0) {
  const Block b = philox4x64({seed, stream}, {i, j, 0, 0});
  return to_unit(b.w[slot & 3]);
}

// Stream ids used across the library; keeping them distinct keeps draws for
// different purposes independent under a shared seed.
inline constexpr std::uint64_t stream_brownian = 0;
inline constexpr std::uint64_t stream_phase = 1;
inline constexpr std::uint64_t stream_shift = 2;
inline constexpr std::uint64_t stream_env = 3;

}  // namespace sthom::rng
