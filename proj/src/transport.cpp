#include "nlmc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include "kdtree.hpp"
#include "network_simplex.hpp"
#include "nlmc/errors.hpp"

namespace nlmc {

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> out(source_count, 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) out[source[k]] += mass[k];
  return out;
}

std::vector<double> TransportPlan::column_sums() const {
  std::vector<double> out(target_count, 0.0);
  for (std::size_t k = 0; k < mass.size(); ++k) out[target[k]] += mass[k];
  return out;
}

std::vector<std::vector<double>> TransportPlan::dense() const {
  std::vector<std::vector<double>> out(source_count, std::vector<double>(target_count, 0.0));
  for (std::size_t k = 0; k < mass.size(); ++k) out[source[k]][target[k]] += mass[k];
  return out;
}

void TransportPlan::write_csv(std::ostream& out) const {
  out << "source_idx,target_idx,mass\n";
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < mass.size(); ++k) out << source[k] << ',' << target[k] << ',' << mass[k] << '\n';
  out.precision(old);
}

namespace {

// Largest-remainder rounding of weights to integers summing exactly to `scale`.
std::vector<std::int64_t> quantize(const std::vector<double>& weights, std::int64_t scale) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::int64_t> q(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / total * static_cast<double>(scale);
    q[i] = static_cast<std::int64_t>(std::floor(exact));
    assigned += q[i];
    remainders[i] = {exact - static_cast<double>(q[i]), i};
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; assigned < scale; k = (k + 1) % remainders.size()) {
    ++q[remainders[k].second];
    ++assigned;
  }
  for (std::size_t k = remainders.size(); assigned > scale;) {
    k = k == 0 ? remainders.size() - 1 : k - 1;
    if (q[remainders[k].second] > 0) {
      --q[remainders[k].second];
      --assigned;
    }
  }
  return q;
}

struct Side {
  DiscreteMeasure merged;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> active;  // merged atoms with nonzero quantized mass
  std::vector<std::int64_t> mass;   // quantized mass of each active atom
  PointCloud points;                // coordinates of active atoms
};

Side prepare(const DiscreteMeasure& m, std::int64_t scale) {
  std::vector<std::vector<std::size_t>> groups;
  DiscreteMeasure merged = m.merged(1e-15, &groups);
  const auto q = quantize(merged.weights(), scale);
  Side side{std::move(merged), std::move(groups), {}, {}, PointCloud(m.dim(), std::vector<double>{})};
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0) {
      side.active.push_back(i);
      side.mass.push_back(q[i]);
      side.points.push_back(side.merged.atom(i));
    }
  }
  return side;
}

double bounding_separation(const PointCloud& a, const PointCloud& b) {
  const auto d = static_cast<std::size_t>(a.dim());
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (const PointCloud* cloud : {&a, &b}) {
    for (std::size_t i = 0; i < cloud->size(); ++i) {
      const auto x = (*cloud)[i];
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], x[k]);
        hi[k] = std::max(hi[k], x[k]);
      }
    }
  }
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
  return std::sqrt(s);
}

}  // namespace

TransportResult w1_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostSpec& cost,
                         const TransportOptions& options) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("w1_exact: dimension mismatch");
  if (!(options.precision > 0.0) || options.precision > 1e-3) {
    throw std::invalid_argument("w1_exact: precision must lie in (0, 1e-3]");
  }
  const auto scale = static_cast<std::int64_t>(std::llround(1.0 / options.precision));

  Side a = prepare(mu, scale);
  Side b = prepare(nu, scale);
  const std::size_t n1 = a.active.size();
  const std::size_t n2 = b.active.size();
  if (n1 + n2 > options.atom_cap) {
    throw CapacityError("w1_exact: " + std::to_string(n1 + n2) + " atoms exceeds cap " +
                        std::to_string(options.atom_cap));
  }

  const double max_cost = cost.of_separation(bounding_separation(a.points, b.points));
  detail::NetworkSimplex solver(a.mass, b.mass, max_cost);
  TransportResult result;

  auto ground = [&](std::size_t i, std::size_t j) { return cost.ground(a.points[i], b.points[j]); };

  if (static_cast<double>(n1) * static_cast<double>(n2) <= static_cast<double>(options.dense_arc_limit)) {
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) solver.add_arc(i, j, ground(i, j));
    }
    solver.greedy_start();
    result.pivots = solver.solve();
  } else {
    std::unordered_set<std::uint64_t> present;
    auto add = [&](std::size_t i, std::size_t j) {
      if (present.insert(static_cast<std::uint64_t>(i) * n2 + j).second) solver.add_arc(i, j, ground(i, j));
    };
    const std::size_t k = options.candidate_neighbors;
    {
      detail::KdTree tree(b.points);
      for (std::size_t i = 0; i < n1; ++i) {
        for (const auto j : tree.nearest(a.points[i], k)) add(i, j);
      }
    }
    {
      detail::KdTree tree(a.points);
      for (std::size_t j = 0; j < n2; ++j) {
        for (const auto i : tree.nearest(b.points[j], k)) add(i, j);
      }
    }

    std::vector<std::pair<double, std::size_t>> violators;
    std::vector<double> demand_pi(n2);
    detail::KdTree target_tree(b.points);
    auto separation_cost = [&](double r) { return cost.of_separation(r); };
    solver.greedy_start();
    while (true) {
      result.pivots += solver.solve();
      solver.refresh_potentials();
      ++result.pricing_rounds;
      const double tol = solver.tolerance();
      for (std::size_t j = 0; j < n2; ++j) demand_pi[j] = solver.demand_potential(j);
      target_tree.set_keys(demand_pi);
      std::size_t added = 0;
      for (std::size_t i = 0; i < n1; ++i) {
        const double pi_i = solver.supply_potential(i);
        violators.clear();
        // Arc (i, j) has negative reduced cost iff c(i, j) < demand_pi[j] - pi_i - tol.
        target_tree.collect_below(a.points[i], -pi_i - tol, separation_cost, [&](std::size_t j) {
          violators.emplace_back(ground(i, j) + pi_i - demand_pi[j], j);
        });
        if (violators.size() > k) {
          std::partial_sort(violators.begin(), violators.begin() + static_cast<std::ptrdiff_t>(k),
                            violators.end());
          violators.resize(k);
        }
        for (const auto& [r, j] : violators) {
          if (present.insert(static_cast<std::uint64_t>(i) * n2 + j).second) {
            solver.add_arc(i, j, ground(i, j));
            ++added;
          }
        }
      }
      if (added == 0) break;
    }
  }
  if (solver.artificial_flow() != 0) throw NumericError("w1_exact: solver left mass unrouted");

  long double total = 0.0L;
  const auto flows = solver.positive_flows();
  for (const auto& f : flows) total += static_cast<long double>(f.flow) * f.cost;
  const double total_cost = static_cast<double>(total / static_cast<long double>(scale));
  result.distance = cost.finalize(total_cost);

  TransportPlan& plan = result.plan;
  plan.source_count = mu.size();
  plan.target_count = nu.size();
  plan.cost = total_cost;
  if (options.keep_plan) {
    // Spread each merged entry over the original duplicate atoms in proportion to
    // their weights, which keeps both marginals exact.
    for (const auto& f : flows) {
      const double m = static_cast<double>(f.flow) / static_cast<double>(scale);
      const std::size_t ga = a.active[f.supply_node];
      const std::size_t gb = b.active[f.demand_node];
      const double wa = a.merged.weight(ga);
      const double wb = b.merged.weight(gb);
      for (const auto i : a.groups[ga]) {
        if (mu.weight(i) == 0.0) continue;
        for (const auto j : b.groups[gb]) {
          if (nu.weight(j) == 0.0) continue;
          plan.source.push_back(i);
          plan.target.push_back(j);
          plan.mass.push_back(m * (mu.weight(i) / wa) * (nu.weight(j) / wb));
        }
      }
    }
  }
  return result;
}

double w1_sorted_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw std::invalid_argument("w1_sorted_1d: requires d = 1");
  // Signed mass events: +w for mu atoms, -w for nu atoms; F_mu - F_nu is the running sum.
  std::vector<std::pair<double, double>> events;
  events.reserve(mu.size() + nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) events.emplace_back(mu.atom(i)[0], mu.weight(i));
  for (std::size_t j = 0; j < nu.size(); ++j) events.emplace_back(nu.atom(j)[0], -nu.weight(j));
  std::sort(events.begin(), events.end());
  long double gap = 0.0L;
  long double integral = 0.0L;
  for (std::size_t k = 0; k + 1 < events.size(); ++k) {
    gap += events[k].second;
    integral += std::fabs(gap) * (static_cast<long double>(events[k + 1].first) - events[k].first);
  }
  return static_cast<double>(integral);
}

double w2_gaussian_equal_cov(std::span<const double> mean_a, std::span<const double> mean_b) {
  if (mean_a.size() != mean_b.size()) throw std::invalid_argument("w2_gaussian_equal_cov: dimension mismatch");
  return distance(mean_a, mean_b);
}

double w2_gaussian_equal_cov(const Point& mean_a, const Point& mean_b) {
  return w2_gaussian_equal_cov(mean_a.coords(), mean_b.coords());
}

}  // namespace nlmc
