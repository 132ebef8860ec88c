#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nlmc/measure.hpp"
#include "nlmc/rng.hpp"

namespace nlmc {

/// Uniform law on the cube [-half_width, half_width]^dim.
struct UniformBox {
  int dim = 1;
  double half_width = 1.0;
};

/// Isotropic Gaussian N(mean, sd^2 I).
struct GaussianLaw {
  std::vector<double> mean;
  double sd = 1.0;
};

using MixtureComponent = std::variant<DiscreteMeasure, UniformBox, GaussianLaw>;

/// Finite mixture of closed-form laws.
struct MixtureLaw {
  std::vector<double> weights;
  std::vector<MixtureComponent> components;

  static MixtureLaw single(MixtureComponent component);
  int dim() const;
  void validate() const;
  /// Merges components describing the same law (identical boxes or Gaussians).
  void simplify();
};

/// Probability vector on m equally spaced points of [-half_width, half_width].
struct GridMeasure1D {
  double half_width = 10.0;
  std::vector<double> weights;

  static GridMeasure1D zeros(std::size_t points, double half_width);
  /// Cell masses of N(mean, sd^2) assigned to the nearest grid point (CDF differences).
  static GridMeasure1D discretized_gaussian(std::size_t points, double half_width, double mean, double sd);
  std::size_t size() const { return weights.size(); }
  double spacing() const { return 2.0 * half_width / static_cast<double>(weights.size() - 1); }
  double point(std::size_t i) const { return -half_width + spacing() * static_cast<double>(i); }
  void validate() const;
  DiscreteMeasure as_measure() const;
};

/// M-particle stand-in for a law that has no closed form. Advanced as its own particle
/// system, so it carries an O(M^{-1/d}) bias that is reported with every use.
struct SurrogateCloud {
  PointCloud particles;
  std::uint64_t seed = 0;
  std::string bias_note;
};

/// The mean-field law eta_n in one of its supported representations.
struct MeanFieldFlow {
  std::variant<MixtureLaw, GridMeasure1D, SurrogateCloud> law;
  std::size_t step = 0;

  int dim() const;
  bool is_mixture() const { return std::holds_alternative<MixtureLaw>(law); }
  bool is_grid() const { return std::holds_alternative<GridMeasure1D>(law); }
  bool is_surrogate() const { return std::holds_alternative<SurrogateCloud>(law); }
};

/// A kernel with its measure argument fixed: an ordinary Markov kernel K(x, .).
class FrozenKernel {
 public:
  virtual ~FrozenKernel() = default;
  virtual int dim() const = 0;
  /// Draws Y ~ K(x, .) into `out` using only `rng`.
  virtual void sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const = 0;

  /// True when K(x, .) = N(m(x), s^2 I) with s independent of x (s = 0 for a
  /// deterministic map). Distances between such kernels are the mean gaps.
  virtual bool gaussian() const { return false; }
  virtual void mean_map(std::span<const double> x, std::span<double> out) const;
  virtual double noise_sd() const;
};

/// Measure-indexed kernel family K^{(n)}_eta.
class NonlinearKernel {
 public:
  virtual ~NonlinearKernel() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  /// K^{(step)}_eta as an ordinary kernel. Homogeneous kernels ignore `step`.
  virtual std::unique_ptr<FrozenKernel> freeze(const DiscreteMeasure& eta, std::size_t step) const = 0;

  /// Whether advance_exact can map `flow` to Phi[flow] without sampling.
  virtual bool has_exact_step(const MeanFieldFlow& /*flow*/) const { return false; }
  /// flow K^{(flow.step + 1)}_flow, returned with step incremented.
  virtual MeanFieldFlow advance_exact(const MeanFieldFlow& flow) const;

  /// Single draw from K^{(step)}_eta(x, .). Convenience for tests; freezes every call.
  void sample(std::span<const double> x, const DiscreteMeasure& eta, std::size_t step, RandomStream& rng,
              std::span<double> out) const;
};

/// Draws one point from a mixture component.
void sample_component(const MixtureComponent& component, RandomStream& rng, std::span<double> out);

/// Inverse-CDF sampling of an index from nonnegative weights (one uniform per draw).
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::span<const double> weights);
  std::size_t operator()(RandomStream& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

}  // namespace nlmc
