#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "nlmc/kernel.hpp"

namespace nlmc {

struct ContractionOptions {
  /// Number of (x, y) pairs evaluated, reflections included.
  std::size_t budget = 500;
  /// Pairs are drawn uniformly from [-box_half_width, box_half_width]^d.
  double box_half_width = 2.0;
  /// Every second pair reuses the previous x and reflects y through it: (x, 2x - y).
  bool antithetic = true;
  /// Draws per kernel when the distance has to be estimated from samples.
  std::size_t cloud_size = 256;
  std::uint64_t seed = 0;
};

struct ContractionEstimate {
  /// max over pairs of W1(K(x,.), K(y,.)) / |x - y|: a lower estimate of tau_1(K).
  double estimate = 0.0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;  // degenerate pairs with x = y
  /// True when every distance came from the Gaussian mean gap; otherwise per-pair
  /// distances are two-cloud estimates with cloud_size draws each (biased upward).
  bool exact = true;
  std::size_t cloud_size = 0;
  std::vector<double> worst_x;
  std::vector<double> worst_y;
};

/// Dirac-pair contraction estimate of an ordinary kernel.
ContractionEstimate dirac_contraction_estimate(const FrozenKernel& kernel, const ContractionOptions& options = {});

/// Same estimator over explicitly supplied pairs.
ContractionEstimate dirac_contraction_estimate(const FrozenKernel& kernel,
                                               const std::vector<std::pair<Point, Point>>& pairs,
                                               const ContractionOptions& options = {});

/// Dirac pairs for the nonlinear map mu -> mu K_mu: compares K_{delta_x}(x, .) with
/// K_{delta_y}(y, .), i.e. Phi(delta_x) with Phi(delta_y). A lower estimate of tau_1(Phi).
ContractionEstimate dirac_contraction_estimate(const NonlinearKernel& kernel, std::size_t step,
                                               const ContractionOptions& options = {});

/// The pairs the estimators above draw for a given dimension and options.
std::vector<std::pair<Point, Point>> contraction_pairs(int dim, const ContractionOptions& options);

}  // namespace nlmc
