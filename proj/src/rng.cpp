#include "nlmc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlmc {

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], so the logarithm is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t RandomStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::index: empty range");
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::uint64_t derive_key(std::uint64_t master_seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(master_seed ^ 0x6a09e667f3bcc909ULL);
  std::uint64_t position = 1;
  for (const auto tag : tags) {
    h = mix64(h ^ mix64(tag + 0x3c6ef372fe94f82bULL * position));
    ++position;
  }
  return h;
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t out = mix64(key_ + 0x9e3779b97f4a7c15ULL * counter_);
  ++counter_;
  return out;
}

double CounterRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace nlmc
