#pragma once

#include <cstdint>

namespace conetree {

// Counter-based randomness: every draw is a pure hash of
// (seed, sample index, vertex index, stream), so the values a realization
// sees never depend on traversal order, worker count, or batch layout.
//
// Streams: 0 = vertex potential, 1 = edge weight to the parent,
//          2 = offspring configuration.

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Hash of (seed, sample index); precompute once per realization.
inline std::uint64_t sample_key(std::uint64_t seed, std::uint64_t sample_index) {
  return mix64(mix64(seed) + sample_index);
}

inline std::uint64_t counter_draw(std::uint64_t key, std::uint64_t vertex_index,
                                  unsigned stream) {
  return mix64(key ^ (vertex_index * 0xd1342543de82ef95ull) ^
               (std::uint64_t(stream) * 0x2545f4914f6cdd1dull));
}

// Uniform on the open interval (0, 1); both endpoints are unreachable so the
// affine image of a bounded interval stays strictly inside it.  52 bits keep
// every value (k + 1/2) * 2^-52 exactly representable; a 53-bit variant would
// round the largest draws up to 1.0.
inline double uniform_open01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace conetree
