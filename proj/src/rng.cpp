#include "fbsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace fbsde {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

// Map 64 random bits to a uniform double in (0, 1]; never returns 0, so the
// Box-Muller logarithm below is always finite.
double to_unit_interval(uint64_t v) {
  return (static_cast<double>(v >> 11) + 1.0) * 0x1.0p-53;
}

struct NormalPair {
  double z0, z1;
};

// Box-Muller pair for one (block, path) address.
NormalPair normal_pair(uint64_t key, uint64_t block, uint64_t path) {
  const std::array<uint32_t, 4> ctr = {
      static_cast<uint32_t>(block), static_cast<uint32_t>(block >> 32),
      static_cast<uint32_t>(path), static_cast<uint32_t>(path >> 32)};
  const std::array<uint32_t, 4> w = philox4x32(ctr, key);
  const double u1 =
      to_unit_interval((static_cast<uint64_t>(w[0]) << 32) | w[1]);
  const double u2 =
      to_unit_interval((static_cast<uint64_t>(w[2]) << 32) | w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter, uint64_t key) {
  std::array<uint32_t, 4> c = counter;
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double normal_at(uint64_t seed, uint64_t stream, uint64_t path, uint64_t index) {
  const uint64_t key = mix64(seed + 0x632BE59BD9B4E019ull * (stream + 1));
  const NormalPair p = normal_pair(key, index >> 1, path);
  return (index & 1) ? p.z1 : p.z0;
}

void fill_normals(uint64_t seed, uint64_t stream, uint64_t path, double* out, size_t count) {
  const uint64_t key = mix64(seed + 0x632BE59BD9B4E019ull * (stream + 1));
  for (size_t i = 0; i < count; i += 2) {
    const NormalPair p = normal_pair(key, i >> 1, path);
    out[i] = p.z0;
    if (i + 1 < count) out[i + 1] = p.z1;
  }
}

}  // namespace fbsde
