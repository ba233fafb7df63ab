#pragma once
// Counter-based random number generation (Philox 4x32, 10 rounds).  Every
// standard normal variate is addressed by (seed, stream, path, index), so an
// ensemble is reproducible bit-for-bit regardless of evaluation order or
// thread count, and disjoint (stream, path) pairs give independent draws.

#include <array>
#include <cstddef>
#include <cstdint>

namespace fbsde {

// One 10-round Philox 4x32 block: 128-bit counter to 128 pseudo-random bits
// under a 64-bit key (key words: lo32, hi32).
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter, uint64_t key);

// SplitMix64 finalizer, used to decorrelate (seed, stream) into a Philox key.
uint64_t mix64(uint64_t x);

// Standard normal variate with O(1) random access.  Entries at consecutive
// even/odd `index` are the two halves of one Box-Muller pair.
double normal_at(uint64_t seed, uint64_t stream, uint64_t path, uint64_t index);

// Fills out[0..count) with normal_at(seed, stream, path, 0..count-1),
// computing each Philox block once.
void fill_normals(uint64_t seed, uint64_t stream, uint64_t path, double* out, size_t count);

}  // namespace fbsde
