#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace nlmc {

/// Source of uniform and Gaussian variates consumed by kernels.
///
/// Kernels only ever see this interface, so tests can substitute a scripted stream to
/// force individual branches of a transition.
class RandomStream {
 public:
  virtual ~RandomStream() = default;

  /// Uniform variate on [0, 1).
  virtual double uniform() = 0;

  /// Standard normal variate (Box-Muller on two uniforms, second value cached).
  virtual double normal();

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);

 private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hashes a master seed together with an ordered list of tags (trial, particle, step, ...)
/// into a stream key. Distinct tag tuples give statistically independent streams.
std::uint64_t derive_key(std::uint64_t master_seed, std::initializer_list<std::uint64_t> tags);

/// Counter-based generator: output i is mix64(key + i * golden). Cheap to construct, so a
/// fresh stream is built for every (trial, particle, step) without any shared state.
class CounterRng final : public RandomStream {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t master_seed, std::initializer_list<std::uint64_t> tags)
      : key_(derive_key(master_seed, tags)) {}

  std::uint64_t next_u64();
  double uniform() override;

  // UniformRandomBitGenerator so std algorithms (std::shuffle) can consume it.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream tags used to keep the different consumers of one master seed apart.
namespace stream_tag {
inline constexpr std::uint64_t kInit = 0x494e4954ULL;       // initial particle draws
inline constexpr std::uint64_t kStep = 0x53544550ULL;       // particle transitions
inline constexpr std::uint64_t kReference = 0x52454646ULL;  // reference-law draws
inline constexpr std::uint64_t kSurrogate = 0x53555252ULL;  // surrogate mean-field cloud
inline constexpr std::uint64_t kPairs = 0x50414952ULL;      // contraction pair sampling
}  // namespace stream_tag

}  // namespace nlmc
