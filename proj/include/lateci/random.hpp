#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace lateci {

// splitmix64 finalizer. A bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed for replication `rep_id` at sample size `n`. Distinct (n, rep_id)
// pairs with n, rep_id < 2^32 map to distinct seeds for a fixed master seed.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t n,
                               std::uint64_t rep_id) noexcept;

// Derives an independent stream seed from a parent seed and a stream index.
std::uint64_t stream_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

/// Portable random stream.
///
/// The engine is mt19937_64, whose output sequence is fixed by the
/// standard; the conversions to uniforms and normals are implemented here
/// rather than through <random> distributions so draws are identical on
/// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, bound), unbiased (rejection sampling).
  std::size_t uniform_index(std::size_t bound);

  // Standard normal via the Marsaglia polar method.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lateci
