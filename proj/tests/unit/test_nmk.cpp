#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlmc/kernel.hpp"
#include "nlmc/lab.hpp"
#include "nlmc/particles.hpp"
#include "nlmc/transport.hpp"
#include "test_util.hpp"

namespace nlmc {
namespace {

using testing::ScriptedRng;

class HalvingFrozen final : public FrozenKernel {
 public:
  explicit HalvingFrozen(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  void sample(std::span<const double> x, RandomStream&, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * x[i];
  }

 private:
  int dim_;
};

class HalvingKernel final : public NonlinearKernel {
 public:
  int dim() const override { return 1; }
  std::string name() const override { return "halving"; }
  std::unique_ptr<FrozenKernel> freeze(const DiscreteMeasure&, std::size_t) const override {
    return std::make_unique<HalvingFrozen>(1);
  }
};

ParticleEnsemble ensemble_of(PointCloud particles, std::uint64_t seed = 1) {
  ParticleEnsemble ens;
  ens.particles = std::move(particles);
  ens.master_seed = seed;
  return ens;
}

double weight_of_box(const MixtureLaw& law) {
  double w = 0.0;
  for (std::size_t c = 0; c < law.components.size(); ++c) {
    if (std::holds_alternative<UniformBox>(law.components[c])) w += law.weights[c];
  }
  return w;
}

TEST(IpsStep, DeterministicHalving) {
  const auto out = ips_step(ensemble_of(PointCloud(1, {2.0, 4.0})), HalvingKernel());
  EXPECT_EQ(out.particles, PointCloud(1, {1.0, 2.0}));
  EXPECT_EQ(out.step, 1u);
}

TEST(IpsStep, SharpKeepBranch) {
  const auto kernel = sharp_mixture_kernel(2);
  const PointCloud start(2, {0.1, 0.2, -0.5, 0.7, 0.9, -0.3});
  StepOptions options;
  options.stream_override = [](std::size_t) { return std::make_unique<ScriptedRng>(std::vector<double>{0.1}); };
  EXPECT_EQ(ips_step(ensemble_of(start), *kernel, options).particles, start);
}

TEST(IpsStep, SharpEmpiricalBranchIndexZero) {
  const auto kernel = sharp_mixture_kernel(1);
  const PointCloud start(1, {0.3, -0.8, 0.5, 0.9});
  StepOptions options;
  options.stream_override = [](std::size_t) { return std::make_unique<ScriptedRng>(std::vector<double>{0.5, 0.0}); };
  EXPECT_EQ(ips_step(ensemble_of(start), *kernel, options).particles, PointCloud(1, {0.3, 0.3, 0.3, 0.3}));
}

TEST(IpsStep, SharpUniformBranch) {
  const auto kernel = sharp_mixture_kernel(2);
  StepOptions options;
  options.stream_override = [](std::size_t) { return std::make_unique<ScriptedRng>(std::vector<double>{0.9, 0.75}); };
  // u = 0.75 maps to 2 * 0.75 - 1 = 0.5 in every coordinate.
  EXPECT_EQ(ips_step(ensemble_of(PointCloud(2, {0.0, 0.0})), *kernel, options).particles, PointCloud(2, {0.5, 0.5}));
}

TEST(IpsStep, DimensionMismatch) {
  EXPECT_THROW(ips_step(ensemble_of(PointCloud(2, {0.0, 0.0})), HalvingKernel()), std::invalid_argument);
}

TEST(IpsStep, ThreadCountDoesNotChangeTrajectories) {
  const auto kernel = sharp_mixture_kernel(3);
  ParticleEnsemble a = initialize_ensemble(uniform_cube_flow(3), 257, 42, 3, 257);
  ParticleEnsemble b = a;
  StepOptions three;
  three.threads = 3;
  for (int k = 0; k < 4; ++k) {
    a = ips_step(a, *kernel);
    b = ips_step(b, *kernel, three);
  }
  EXPECT_EQ(a.particles, b.particles);
}

TEST(IpsStep, SingleParticle) {
  const auto kernel = sharp_mixture_kernel(1);
  ParticleEnsemble ens = initialize_ensemble(uniform_cube_flow(1), 1, 5);
  for (int k = 0; k < 5; ++k) ens = ips_step(ens, *kernel);
  EXPECT_EQ(ens.size(), 1u);
  EXPECT_LE(std::fabs(ens.particles[0][0]), 1.0);
}

TEST(IpsStep, ExchangeabilityMomentIdentity) {
  // E ||X^1_n||^2 = E M_2(eta^N_n) for exchangeable particles.
  const auto kernel = sharp_mixture_kernel(2);
  MeanFieldFlow eta0;
  eta0.law = MixtureLaw::single(GaussianLaw{{0.5, -0.5}, 1.0});
  const std::size_t T = 400, N = 8;
  std::vector<double> first(T), whole(T);
  for (std::size_t t = 0; t < T; ++t) {
    ParticleEnsemble ens = initialize_ensemble(eta0, N, 17, t);
    for (int k = 0; k < 3; ++k) ens = ips_step(ens, *kernel);
    first[t] = std::pow(norm(ens.particles[0]), 2);
    whole[t] = moment(ens.empirical(), LyapunovSpec::power(2));
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto se = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1) / v.size());
  };
  EXPECT_LE(std::fabs(mean(first) - mean(whole)), 4.0 * std::hypot(se(first), se(whole)));
}

TEST(IpsStep, PermutedStartHasSameSymmetricStatistics) {
  const auto kernel = sharp_mixture_kernel(1);
  const PointCloud start(1, {-3.0, -1.0, 0.5, 2.0, 4.0});
  const PointCloud reversed(1, {4.0, 2.0, 0.5, -1.0, -3.0});
  const std::size_t T = 400;
  std::vector<double> a(T), b(T);
  for (std::size_t t = 0; t < T; ++t) {
    ParticleEnsemble ea = ensemble_of(start, 100 + t), eb = ensemble_of(reversed, 100000 + t);
    for (int k = 0; k < 2; ++k) {
      ea = ips_step(ea, *kernel);
      eb = ips_step(eb, *kernel);
    }
    a[t] = moment(ea.empirical(), LyapunovSpec::power(2));
    b[t] = moment(eb.empirical(), LyapunovSpec::power(2));
  }
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / T, mb = std::accumulate(b.begin(), b.end(), 0.0) / T;
  double va = 0.0, vb = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    va += (a[t] - ma) * (a[t] - ma);
    vb += (b[t] - mb) * (b[t] - mb);
  }
  const double se = std::sqrt(va / (T - 1) / T + vb / (T - 1) / T);
  EXPECT_LE(std::fabs(ma - mb), 4.0 * se);
}

TEST(MeanFieldStep, SharpUniformIsInvariant) {
  const auto kernel = sharp_mixture_kernel(3);
  MeanFieldFlow flow = uniform_cube_flow(3);
  for (int k = 0; k < 5; ++k) flow = mean_field_step(flow, *kernel);
  const auto& law = std::get<MixtureLaw>(flow.law);
  ASSERT_EQ(law.components.size(), 1u);
  EXPECT_NEAR(law.weights[0], 1.0, 1e-15);
  EXPECT_EQ(flow.step, 5u);
}

TEST(MeanFieldStep, SharpDiracRecursion) {
  const auto kernel = sharp_mixture_kernel(2);
  MeanFieldFlow flow;
  flow.law = MixtureLaw::single(DiscreteMeasure::dirac({0.0, 0.0}));
  for (int n = 1; n <= 6; ++n) {
    flow = mean_field_step(flow, *kernel);
    const auto& law = std::get<MixtureLaw>(flow.law);
    EXPECT_EQ(law.components.size(), 2u);
    EXPECT_NEAR(weight_of_box(law), 1.0 - std::pow(2.0 / 3.0, n), 1e-14);
  }
}

TEST(MeanFieldStep, NoStepperNoSurrogate) {
  MeanFieldFlow flow;
  flow.law = MixtureLaw::single(DiscreteMeasure::dirac({1.0}));
  EXPECT_THROW(mean_field_step(flow, HalvingKernel()), std::invalid_argument);
  const MeanFieldFlow cloud = make_surrogate(flow, 16, 3);
  MeanFieldOptions no;
  no.allow_surrogate = false;
  EXPECT_THROW(mean_field_step(cloud, HalvingKernel(), no), std::invalid_argument);
  const MeanFieldFlow next = mean_field_step(cloud, HalvingKernel());
  ASSERT_TRUE(next.is_surrogate());
  EXPECT_EQ(std::get<SurrogateCloud>(next.law).particles[0][0], 0.5);
  EXPECT_FALSE(std::get<SurrogateCloud>(next.law).bias_note.empty());
}

TEST(SampleFlow, Examples) {
  CounterRng rng(1, {7});
  MeanFieldFlow dirac;
  dirac.law = MixtureLaw::single(DiscreteMeasure::dirac({0.0, 0.0}));
  const auto zeros = sample_flow(dirac, 50, rng);
  for (const double v : zeros.flat()) EXPECT_EQ(v, 0.0);

  const auto u = sample_flow(uniform_cube_flow(1), 100000, rng);
  const double mean = std::accumulate(u.flat().begin(), u.flat().end(), 0.0) / 1e5;
  EXPECT_LE(std::fabs(mean), 0.02);

  GridMeasure1D grid = GridMeasure1D::zeros(11, 5.0);
  grid.weights[5] = 1.0;
  MeanFieldFlow g;
  g.law = grid;
  const auto draws = sample_flow(g, 20, rng);
  for (const double v : draws.flat()) EXPECT_EQ(v, grid.point(5));
}

TEST(EstimateW1, DiracReference) {
  MeanFieldFlow dirac;
  dirac.law = MixtureLaw::single(DiscreteMeasure::dirac({0.0, 0.0}));
  const auto ens = initialize_ensemble(dirac, 16, 3);
  CounterRng rng(3, {1});
  EXPECT_EQ(estimate_w1_to_reference(ens, dirac, 64, CostSpec::euclidean(), rng).distance, 0.0);
}

TEST(EstimateW1, GridPointMass) {
  GridMeasure1D grid = GridMeasure1D::zeros(21, 10.0);
  grid.weights[11] = 1.0;  // the grid point at 1.0
  ASSERT_DOUBLE_EQ(grid.point(11), 1.0);
  MeanFieldFlow g;
  g.law = grid;
  CounterRng rng(3, {1});
  const auto r = estimate_w1_to_reference(ensemble_of(PointCloud(1, std::vector<double>(8, 0.0))), g, 8,
                                          CostSpec::euclidean(), rng);
  EXPECT_NEAR(r.distance, 1.0, 1e-12);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.reference_size, 0u);
}

TEST(EstimateW1, UniformCloudDecreasesInN) {
  const auto flow = uniform_cube_flow(3);
  auto average = [&](std::size_t N) {
    double s = 0.0;
    for (std::size_t t = 0; t < 20; ++t) {
      const auto ens = initialize_ensemble(flow, N, 9, t, N);
      CounterRng rng(9, {N, t});
      const auto r = estimate_w1_to_reference(ens, flow, N, CostSpec::euclidean(), rng, transport_for(N, N));
      EXPECT_GT(r.distance, 0.0);
      EXPECT_EQ(r.reference_size, N);
      s += r.distance;
    }
    return s / 20.0;
  };
  EXPECT_LT(average(1024), average(256));
}

}  // namespace
}  // namespace nlmc
