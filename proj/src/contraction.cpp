#include "nlmc/contraction.hpp"

#include <stdexcept>

#include "nlmc/rng.hpp"
#include "nlmc/transport.hpp"

namespace nlmc {

namespace {

double kernel_gap(const FrozenKernel& kx, const FrozenKernel& ky, const Point& x, const Point& y,
                  const ContractionOptions& options, std::uint64_t pair_index, bool& exact) {
  const auto d = static_cast<std::size_t>(kx.dim());
  if (kx.gaussian() && ky.gaussian() && kx.noise_sd() == ky.noise_sd()) {
    std::vector<double> mx(d), my(d);
    kx.mean_map(x.coords(), mx);
    ky.mean_map(y.coords(), my);
    return w2_gaussian_equal_cov(mx, my);
  }
  exact = false;
  const std::size_t m = options.cloud_size;
  PointCloud cx(static_cast<int>(d), m), cy(static_cast<int>(d), m);
  for (std::size_t i = 0; i < m; ++i) {
    CounterRng rx(options.seed, {stream_tag::kPairs, pair_index, 0, i});
    CounterRng ry(options.seed, {stream_tag::kPairs, pair_index, 1, i});
    kx.sample(x.coords(), rx, cx.mutable_row(i));
    ky.sample(y.coords(), ry, cy.mutable_row(i));
  }
  TransportOptions transport;
  transport.atom_cap = 2 * m;
  transport.keep_plan = false;
  return w1_exact(DiscreteMeasure::uniform(cx), DiscreteMeasure::uniform(cy), CostSpec::euclidean(1.0), transport)
      .distance;
}

template <typename KernelsFor>
ContractionEstimate run(const std::vector<std::pair<Point, Point>>& pairs, const ContractionOptions& options,
                        KernelsFor&& kernels_for) {
  ContractionEstimate out;
  out.estimate = -1.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [x, y] = pairs[p];
    const double separation = distance(x.coords(), y.coords());
    if (separation == 0.0) {
      ++out.skipped;
      continue;
    }
    const auto [kx, ky] = kernels_for(x, y);
    const double ratio = kernel_gap(*kx, *ky, x, y, options, p, out.exact) / separation;
    ++out.pairs;
    if (ratio > out.estimate) {
      out.estimate = ratio;
      out.worst_x.assign(x.coords().begin(), x.coords().end());
      out.worst_y.assign(y.coords().begin(), y.coords().end());
    }
  }
  if (out.pairs == 0) throw std::invalid_argument("dirac_contraction_estimate: every pair is degenerate");
  if (!out.exact) out.cloud_size = options.cloud_size;
  return out;
}

}  // namespace

std::vector<std::pair<Point, Point>> contraction_pairs(int dim, const ContractionOptions& options) {
  if (options.budget == 0) throw std::invalid_argument("contraction_pairs: budget must be >= 1");
  CounterRng rng(options.seed, {stream_tag::kPairs});
  std::vector<std::pair<Point, Point>> pairs;
  pairs.reserve(options.budget);
  const double h = options.box_half_width;
  for (std::size_t p = 0; p < options.budget; ++p) {
    if (options.antithetic && p % 2 == 1) {
      const auto& [x, y] = pairs.back();
      std::vector<double> reflected(static_cast<std::size_t>(dim));
      for (std::size_t k = 0; k < reflected.size(); ++k) reflected[k] = 2.0 * x[k] - y[k];
      pairs.emplace_back(x, Point(std::move(reflected)));
      continue;
    }
    std::vector<double> x(static_cast<std::size_t>(dim)), y(static_cast<std::size_t>(dim));
    for (auto& v : x) v = h * (2.0 * rng.uniform() - 1.0);
    for (auto& v : y) v = h * (2.0 * rng.uniform() - 1.0);
    pairs.emplace_back(Point(std::move(x)), Point(std::move(y)));
  }
  return pairs;
}

ContractionEstimate dirac_contraction_estimate(const FrozenKernel& kernel,
                                               const std::vector<std::pair<Point, Point>>& pairs,
                                               const ContractionOptions& options) {
  return run(pairs, options, [&](const Point&, const Point&) {
    return std::pair<const FrozenKernel*, const FrozenKernel*>(&kernel, &kernel);
  });
}

ContractionEstimate dirac_contraction_estimate(const FrozenKernel& kernel, const ContractionOptions& options) {
  return dirac_contraction_estimate(kernel, contraction_pairs(kernel.dim(), options), options);
}

ContractionEstimate dirac_contraction_estimate(const NonlinearKernel& kernel, std::size_t step,
                                               const ContractionOptions& options) {
  const auto pairs = contraction_pairs(kernel.dim(), options);
  std::unique_ptr<FrozenKernel> kx, ky;
  return run(pairs, options, [&](const Point& x, const Point& y) {
    kx = kernel.freeze(DiscreteMeasure::dirac(x), step);
    ky = kernel.freeze(DiscreteMeasure::dirac(y), step);
    return std::pair<const FrozenKernel*, const FrozenKernel*>(kx.get(), ky.get());
  });
}

}  // namespace nlmc
