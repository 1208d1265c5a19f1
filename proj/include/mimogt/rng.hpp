#pragma once

// Deterministic random streams. Every unit of Monte Carlo work (a round, a
// block of samples) owns a stream keyed by (master seed, purpose, index), so
// results do not depend on how work is split across threads.

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace mimogt {

// Boost distributions are used instead of <random> ones so that streams are
// bit-identical across standard library implementations.
using Engine = boost::random::mt19937_64;

enum class StreamTag : std::uint64_t {
  codebook = 0x636f6465,
  round = 0x726f756e,
  energy = 0x656e6572,
  crossover = 0x63726f73,
  misc = 0x6d697363,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(tag))) + index);
}

inline Engine make_stream(std::uint64_t master, StreamTag tag, std::uint64_t index) {
  return Engine(derive_seed(master, tag, index));
}

inline double uniform01(Engine& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

inline double standard_normal(Engine& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

/// Uniform integer in [0, bound).
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t bound) {
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(rng);
}

}  // namespace mimogt
