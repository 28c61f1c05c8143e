#include "lateci/random.hpp"

#include <cmath>
#include <limits>

namespace lateci {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t n,
                               std::uint64_t rep_id) noexcept {
  const std::uint64_t key = (n << 32) | (rep_id & 0xffffffffULL);
  return mix64(key ^ mix64(master));
}

std::uint64_t stream_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix64(mix64(parent) + 0x632be59bd9b4e019ULL * (stream + 1));
}

std::size_t Rng::uniform_index(std::size_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t b = bound;
  // Largest multiple of b that fits; draws above it are rejected.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % b);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace lateci
