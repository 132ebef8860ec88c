#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <numeric>
#include <set>
#include <sstream>

#include "nlmc/contraction.hpp"
#include "nlmc/errors.hpp"
#include "nlmc/mckean_vlasov.hpp"
#include "nlmc/measure.hpp"
#include "nlmc/transport.hpp"
#include "test_util.hpp"

namespace nlmc {
namespace {

using testing::brute_force_matching;
using testing::cdf_w1;
using testing::random_cloud;
using testing::random_weights;

DiscreteMeasure line(std::vector<double> xs, std::vector<double> ws = {}) {
  if (ws.empty()) ws.assign(xs.size(), 1.0 / static_cast<double>(xs.size()));
  return DiscreteMeasure(PointCloud(1, std::move(xs)), std::move(ws));
}

TEST(Point, RejectsNonFinite) {
  EXPECT_THROW(Point({1.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(Point(std::vector<double>{}), std::invalid_argument);
}

TEST(DiscreteMeasure, ValidatesWeights) {
  EXPECT_THROW(DiscreteMeasure(PointCloud(1, {0.0, 1.0}), {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(DiscreteMeasure(PointCloud(1, {0.0, 1.0}), {1.5, -0.5}), std::invalid_argument);
  EXPECT_NO_THROW(DiscreteMeasure(PointCloud(1, {0.0, 1.0}), {0.25, 0.75}));
}

TEST(DiscreteMeasure, MergesDuplicates) {
  const auto m = line({1.0, 0.0, 1.0}).merged();
  ASSERT_EQ(m.size(), 2u);
  double w1 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.atom(i)[0] == 1.0) w1 = m.weight(i);
  }
  EXPECT_NEAR(w1, 2.0 / 3.0, 1e-15);
}

TEST(W1Exact, IdentityIsZero) {
  std::mt19937_64 gen(1);
  const auto mu = DiscreteMeasure(random_cloud(gen, 2, 7), random_weights(gen, 7));
  EXPECT_NEAR(w1_exact(mu, mu).distance, 0.0, 1e-12);
}

TEST(W1Exact, DiracTranslation) {
  EXPECT_NEAR(w1_exact(DiscreteMeasure::dirac({0.0, 0.0}), DiscreteMeasure::dirac({1.0, 1.0})).distance,
              std::sqrt(2.0), 1e-12);
}

TEST(W1Exact, TwoPointMatching) {
  const auto mu = DiscreteMeasure::uniform(PointCloud(2, {0, 0, 1, 0}));
  const auto nu = DiscreteMeasure::uniform(PointCloud(2, {0, 1, 1, 1}));
  EXPECT_NEAR(w1_exact(mu, nu).distance, 1.0, 1e-12);
}

TEST(W1Exact, Errors) {
  EXPECT_THROW(w1_exact(DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({0.0, 1.0})), std::invalid_argument);
  std::mt19937_64 gen(2);
  TransportOptions small;
  small.atom_cap = 10;
  EXPECT_THROW(w1_exact(DiscreteMeasure::uniform(random_cloud(gen, 1, 6)),
                        DiscreteMeasure::uniform(random_cloud(gen, 1, 6)), CostSpec::euclidean(), small),
               CapacityError);
}

TEST(W1Exact, PlanMarginals) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n1 = 3 + rep % 5, n2 = 2 + rep % 7;
    const auto wa = random_weights(gen, n1), wb = random_weights(gen, n2);
    const DiscreteMeasure mu(random_cloud(gen, 2, n1), wa), nu(random_cloud(gen, 2, n2), wb);
    const auto r = w1_exact(mu, nu);
    const auto rows = r.plan.row_sums(), cols = r.plan.column_sums();
    for (std::size_t i = 0; i < n1; ++i) EXPECT_NEAR(rows[i], wa[i], 1e-9);
    for (std::size_t j = 0; j < n2; ++j) EXPECT_NEAR(cols[j], wb[j], 1e-9);
    for (const double m : r.plan.mass) EXPECT_GE(m, 0.0);
    double cost = 0.0;
    for (std::size_t k = 0; k < r.plan.entries(); ++k) {
      cost += r.plan.mass[k] * distance(mu.atom(r.plan.source[k]), nu.atom(r.plan.target[k]));
    }
    EXPECT_NEAR(cost, r.distance, 1e-9);
  }
}

TEST(W1Exact, PlanCsv) {
  const auto r = w1_exact(line({0.0, 1.0}), line({0.5}));
  std::ostringstream out;
  r.plan.write_csv(out);
  EXPECT_NE(out.str().find("source_idx,target_idx,mass"), std::string::npos);
}

TEST(W1Exact, MatchesPermutationOracle) {
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + rep % 6;
    const int d = 1 + rep % 3;
    const auto a = random_cloud(gen, d, n), b = random_cloud(gen, d, n);
    EXPECT_NEAR(w1_exact(DiscreteMeasure::uniform(a), DiscreteMeasure::uniform(b)).distance,
                brute_force_matching(a, b), 1e-9);
  }
}

TEST(W1Exact, MetricAxioms) {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 30; ++rep) {
    const int d = 1 + rep % 3;
    auto make = [&] {
      const std::size_t n = 1 + gen() % 16;
      return DiscreteMeasure(random_cloud(gen, d, n), random_weights(gen, n));
    };
    const auto a = make(), b = make(), c = make();
    const double ab = w1_exact(a, b).distance, ba = w1_exact(b, a).distance;
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_LE(ab, w1_exact(a, c).distance + w1_exact(c, b).distance + 1e-9);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(W1Exact, PowerCostIsPthRoot) {
  // Two atoms a distance 2 apart: W_2 = 2 regardless of the power.
  EXPECT_NEAR(w1_exact(DiscreteMeasure::dirac({0.0}), DiscreteMeasure::dirac({2.0}), CostSpec::euclidean(2.0)).distance,
              2.0, 1e-12);
  // uniform{0, 1} vs delta_0: W_2^2 = 1/2.
  EXPECT_NEAR(w1_exact(line({0.0, 1.0}), line({0.0}), CostSpec::euclidean(2.0)).distance, std::sqrt(0.5), 1e-12);
}

TEST(W1Exact, ModifiedCostSandwich) {
  const auto profile = ConcaveProfile::exponential_blend(0.5, 2.0, 1.0);
  const auto rho = CostSpec::modified(profile);
  rho.validate();
  std::mt19937_64 gen(6);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n1 = 2 + rep % 6, n2 = 3 + rep % 4;
    const DiscreteMeasure mu(random_cloud(gen, 2, n1, 3.0), random_weights(gen, n1));
    const DiscreteMeasure nu(random_cloud(gen, 2, n2, 3.0), random_weights(gen, n2));
    const double e = w1_exact(mu, nu).distance, m = w1_exact(mu, nu, rho).distance;
    EXPECT_LE(0.5 * e, m + 1e-9);
    EXPECT_LE(m, 2.0 * e + 1e-9);
  }
}

TEST(CostSpec, RejectsBadProfiles) {
  EXPECT_THROW(CostSpec::euclidean(0.5).validate(), std::invalid_argument);
  ConcaveProfile bad{[](double r) { return r + 1.0; }, 1.0, 2.0, "shifted"};
  EXPECT_THROW(CostSpec::modified(bad).validate(), std::invalid_argument);
}

TEST(W1Sorted1d, Examples) {
  EXPECT_NEAR(w1_sorted_1d(line({0.0, 1.0}), line({0.5, 1.5})), 0.5, 1e-15);
  EXPECT_NEAR(w1_sorted_1d(line({0.0}), line({-1.0, 1.0})), 1.0, 1e-15);
  const auto mu = line({0.3, -2.0, 5.0}, {0.2, 0.5, 0.3});
  EXPECT_EQ(w1_sorted_1d(mu, mu), 0.0);
  EXPECT_THROW(w1_sorted_1d(DiscreteMeasure::dirac({0.0, 0.0}), DiscreteMeasure::dirac({0.0, 0.0})),
               std::invalid_argument);
}

TEST(W1Sorted1d, AgreesWithExactAndCdfOracle) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n1 = 1 + gen() % 64, n2 = 1 + gen() % 64;
    const auto a = random_cloud(gen, 1, n1, 4.0), b = random_cloud(gen, 1, n2, 4.0);
    const auto wa = random_weights(gen, n1), wb = random_weights(gen, n2);
    const DiscreteMeasure mu(a, wa), nu(b, wb);
    std::vector<std::pair<double, double>> pa, pb;
    for (std::size_t i = 0; i < n1; ++i) pa.emplace_back(a[i][0], wa[i]);
    for (std::size_t j = 0; j < n2; ++j) pb.emplace_back(b[j][0], wb[j]);
    const double sorted = w1_sorted_1d(mu, nu);
    EXPECT_NEAR(sorted, w1_exact(mu, nu).distance, 1e-10);
    EXPECT_NEAR(sorted, cdf_w1(pa, pb), 1e-12);
  }
}

TEST(W2Gaussian, MeanGap) {
  EXPECT_EQ(w2_gaussian_equal_cov(Point{0.0, 0.0}, Point{0.0, 0.0}), 0.0);
  EXPECT_NEAR(w2_gaussian_equal_cov(Point{0.0, 0.0}, Point{3.0, 4.0}), 5.0, 1e-15);
  EXPECT_NEAR(w2_gaussian_equal_cov(Point{1.0}, Point{-1.0}), 2.0, 1e-15);
  EXPECT_THROW(w2_gaussian_equal_cov(Point{1.0}, Point{1.0, 2.0}), std::invalid_argument);
}

TEST(Moment, Examples) {
  EXPECT_EQ(moment(DiscreteMeasure::dirac({0.0}), LyapunovSpec::power(2)), 0.0);
  EXPECT_NEAR(moment(line({-1.0, 1.0}), LyapunovSpec::power(2)), 1.0, 1e-15);
  EXPECT_NEAR(moment(DiscreteMeasure::dirac({3.0, 4.0}), LyapunovSpec::power(1)), 5.0, 1e-15);
  EXPECT_NEAR(moment(DiscreteMeasure::dirac({1.0}), LyapunovSpec::square_exponential(0.5)), std::exp(0.5), 1e-15);
  EXPECT_THROW(moment(line({1.0}), LyapunovSpec::power(0.5)), std::invalid_argument);
  EXPECT_THROW(moment(line({1.0}), LyapunovSpec::square_exponential(-1.0)), std::invalid_argument);
}

TEST(TupleMeasures, TensorProduct) {
  const PointCloud x(1, {0.0, 1.0});
  const auto t = tensor_product_measure(x, 2);
  ASSERT_EQ(t.size(), 4u);
  ASSERT_EQ(t.dim(), 2);
  std::set<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(t.weight(i), 0.25, 1e-15);
    atoms.emplace(t.atom(i)[0], t.atom(i)[1]);
  }
  EXPECT_EQ(atoms, (std::set<std::pair<double, double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(TupleMeasures, DistinctTuples) {
  const PointCloud x(1, {0.0, 1.0});
  const auto t = distinct_tuple_measure(x, 2);
  ASSERT_EQ(t.size(), 2u);
  std::set<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_NEAR(t.weight(i), 0.5, 1e-15);
    atoms.emplace(t.atom(i)[0], t.atom(i)[1]);
  }
  EXPECT_EQ(atoms, (std::set<std::pair<double, double>>{{0, 1}, {1, 0}}));
  EXPECT_EQ(distinct_tuple_measure(PointCloud(1, {0.0, 1.0, 2.0, 3.0}), 2).size(), 12u);
  EXPECT_THROW(distinct_tuple_measure(x, 3), std::invalid_argument);
  EXPECT_THROW(tensor_product_measure(PointCloud(1, std::vector<double>(20, 0.0)), 5, 1000), CapacityError);
}

TEST(TupleMeasures, QOneCollapsesToEmpirical) {
  std::mt19937_64 gen(8);
  const auto x = random_cloud(gen, 2, 5);
  const auto m = DiscreteMeasure::uniform(x);
  EXPECT_NEAR(w1_exact(tensor_product_measure(x, 1), m).distance, 0.0, 1e-12);
  EXPECT_NEAR(w1_exact(distinct_tuple_measure(x, 1), m).distance, 0.0, 1e-12);
}

TEST(TupleMeasures, TensorEqualsProductOfEmpirical) {
  // Weighted product of m(X) with itself built independently, compared atom by atom.
  std::mt19937_64 gen(9);
  const auto x = random_cloud(gen, 2, 4);
  const auto t = tensor_product_measure(x, 2);
  std::vector<double> flat, w;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      for (const double v : x[i]) flat.push_back(v);
      for (const double v : x[j]) flat.push_back(v);
      w.push_back(1.0 / 16.0);
    }
  }
  const DiscreteMeasure product(PointCloud(4, flat), w);
  EXPECT_NEAR(w1_exact(t, product).distance, 0.0, 1e-12);
}

TEST(FallingFactorial, Values) {
  EXPECT_EQ(falling_factorial(4, 2), 12.0);
  EXPECT_EQ(falling_factorial(5, 0), 1.0);
  EXPECT_EQ(falling_factorial(6, 3), 120.0);
}

// Kernels with a known Dirac-pair supremum.
class AffineFrozen final : public FrozenKernel {
 public:
  AffineFrozen(int dim, double scale) : dim_(dim), scale_(scale) {}
  int dim() const override { return dim_; }
  void sample(std::span<const double> x, RandomStream&, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_ * x[i];
  }
  bool gaussian() const override { return true; }
  void mean_map(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale_ * x[i];
  }
  double noise_sd() const override { return 0.0; }

 private:
  int dim_;
  double scale_;
};

// Same map without the Gaussian descriptor: forces the sampled-cloud path.
class OpaqueHalving final : public FrozenKernel {
 public:
  int dim() const override { return 1; }
  void sample(std::span<const double> x, RandomStream&, std::span<double> out) const override { out[0] = 0.5 * x[0]; }
};

TEST(DiracContraction, IdentityAndHalving) {
  ContractionOptions options;
  options.budget = 200;
  const auto id = dirac_contraction_estimate(AffineFrozen(2, 1.0), options);
  EXPECT_NEAR(id.estimate, 1.0, 1e-12);
  EXPECT_TRUE(id.exact);
  EXPECT_NEAR(dirac_contraction_estimate(AffineFrozen(3, 0.5), options).estimate, 0.5, 1e-12);
  options.cloud_size = 16;
  const auto opaque = dirac_contraction_estimate(OpaqueHalving(), options);
  EXPECT_FALSE(opaque.exact);
  EXPECT_NEAR(opaque.estimate, 0.5, 1e-12);
}

TEST(DiracContraction, FrozenEulerMaruyama) {
  const auto kernel = mv_kernel(MvParams::quadratic(2, 0.1, 1.0, 0.0));
  std::mt19937_64 gen(10);
  const auto eta = DiscreteMeasure::uniform(random_cloud(gen, 2, 5));
  ContractionOptions options;
  options.budget = 300;
  EXPECT_NEAR(dirac_contraction_estimate(*kernel->freeze(eta, 1), options).estimate, 0.9, 1e-12);
}

TEST(DiracContraction, DegeneratePairs) {
  std::vector<std::pair<Point, Point>> pairs{{Point{1.0}, Point{1.0}}};
  EXPECT_THROW(dirac_contraction_estimate(AffineFrozen(1, 1.0), pairs), std::invalid_argument);
  pairs.emplace_back(Point{0.0}, Point{2.0});
  const auto est = dirac_contraction_estimate(AffineFrozen(1, 0.25), pairs);
  EXPECT_EQ(est.skipped, 1u);
  EXPECT_NEAR(est.estimate, 0.25, 1e-15);
}

// Finite-state kernels on 1D atoms: row i of K is the law K(s_i, .).
struct FiniteKernel {
  std::vector<double> states;
  std::vector<std::vector<double>> rows;

  DiscreteMeasure row(std::size_t i) const { return line(states, rows[i]); }
  DiscreteMeasure push(const std::vector<double>& mu) const {
    std::vector<double> w(states.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      for (std::size_t j = 0; j < w.size(); ++j) w[j] += mu[i] * rows[i][j];
    }
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return line(states, w);
  }
};

FiniteKernel random_kernel(std::mt19937_64& gen, const std::vector<double>& states) {
  FiniteKernel k{states, {}};
  for (std::size_t i = 0; i < states.size(); ++i) k.rows.push_back(random_weights(gen, states.size()));
  return k;
}

TEST(BasicProperties, MixtureBound) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> states = {0.0, 0.4 + 0.6 * (gen() % 100) / 100.0, 2.0};
    const auto K = random_kernel(gen, states), Q = random_kernel(gen, states);
    const auto mu = random_weights(gen, 3);
    double rhs = 0.0;
    for (std::size_t i = 0; i < 3; ++i) rhs += mu[i] * w1_exact(K.row(i), Q.row(i)).distance;
    EXPECT_LE(w1_exact(K.push(mu), Q.push(mu)).distance, rhs + 1e-9);
  }
}

TEST(BasicProperties, CouplingBound) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 200; ++rep) {
    const std::vector<double> states = {-1.0, 0.5, 1.5};
    const auto K = random_kernel(gen, states);
    const auto mu = random_weights(gen, 3), nu = random_weights(gen, 3);
    const auto opt = w1_exact(line(states, mu), line(states, nu));
    double rhs = 0.0;
    for (std::size_t k = 0; k < opt.plan.entries(); ++k) {
      rhs += opt.plan.mass[k] * w1_exact(K.row(opt.plan.source[k]), K.row(opt.plan.target[k])).distance;
    }
    EXPECT_LE(w1_exact(K.push(mu), K.push(nu)).distance, rhs + 1e-9);
  }
}

TEST(WassContract, DiracSupremumDominates) {
  std::mt19937_64 gen(13);
  const std::vector<double> states = {0.0, 1.0, 3.0};
  const FiniteKernel K{states, {{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.1, 0.2, 0.7}}};
  double sup = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      sup = std::max(sup, w1_exact(K.row(i), K.row(j)).distance / std::fabs(states[i] - states[j]));
    }
  }
  for (int rep = 0; rep < 300; ++rep) {
    const auto mu = random_weights(gen, 3), nu = random_weights(gen, 3);
    const double base = w1_exact(line(states, mu), line(states, nu)).distance;
    if (base < 1e-12) continue;
    EXPECT_LE(w1_exact(K.push(mu), K.push(nu)).distance, sup * base + 1e-9);
  }
}

}  // namespace
}  // namespace nlmc
