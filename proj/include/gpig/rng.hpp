#pragma once

// Seeded random streams.
//
// Every random draw in the library comes from a std::mt19937_64 whose seed is
// derived by hashing (master seed, sub-seed, purpose tag) with splitmix64.
// Both the engine and boost's normal/uniform distributions are specified
// algorithms, so a given stream yields identical values on every platform.

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace gpig {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, used to fold purpose tags into seeds.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t sub,
                                    std::string_view purpose) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ sub) ^ tag_hash(purpose));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t sub, std::string_view purpose) {
  return Rng(stream_seed(master, sub, purpose));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index n) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  boost::random::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

}  // namespace gpig
