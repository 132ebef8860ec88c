#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "nlmc/measure.hpp"

namespace nlmc {

struct TransportOptions {
  /// Largest combined support size (after merging duplicates) accepted by the solver.
  std::size_t atom_cap = 4096;
  /// Masses are rounded to integer multiples of this quantum (relative to total mass).
  double precision = 1e-12;
  bool keep_plan = true;
  /// Problems with more candidate arcs than this are solved by column generation:
  /// start from nearest-neighbour arcs, price every arc exactly, add violators, repeat.
  std::size_t dense_arc_limit = std::size_t{1} << 22;
  std::size_t candidate_neighbors = 8;
};

/// Sparse coupling: entries (source[k], target[k], mass[k]) with indices into the
/// original (unmerged) atom lists.
struct TransportPlan {
  std::size_t source_count = 0;
  std::size_t target_count = 0;
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  std::vector<double> mass;
  /// Optimal total ground cost sum_k mass[k] * c(x_source, y_target).
  double cost = 0.0;

  std::size_t entries() const { return mass.size(); }
  std::vector<double> row_sums() const;
  std::vector<double> column_sums() const;
  std::vector<std::vector<double>> dense() const;
  /// Writes "source_idx,target_idx,mass" rows.
  void write_csv(std::ostream& out) const;
};

struct TransportResult {
  double distance = 0.0;
  TransportPlan plan;
  std::size_t pivots = 0;
  std::size_t pricing_rounds = 0;
};

/// Exact optimal transport between two discrete measures under `cost`. For power costs
/// the p-th root of the optimal total cost is returned; for modified costs the total.
TransportResult w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostSpec& cost = CostSpec::euclidean(1.0),
                         const TransportOptions& options = {});

/// W1 on the line as the integral of |F_mu - F_nu|. Requires d = 1.
double w1_sorted_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// Distance between two Gaussians with a common covariance: the mean gap.
double w2_gaussian_equal_cov(const Point& mean_a, const Point& mean_b);
double w2_gaussian_equal_cov(std::span<const double> mean_a, std::span<const double> mean_b);

}  // namespace nlmc
