#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlmc/contraction.hpp"
#include "nlmc/errors.hpp"
#include "nlmc/mckean_vlasov.hpp"
#include "nlmc/transport.hpp"
#include "test_util.hpp"

namespace nlmc {
namespace {

using testing::ConstantNormalRng;
using testing::random_cloud;
using testing::random_weights;

Point draw(const NonlinearKernel& k, const Point& x, const DiscreteMeasure& eta, RandomStream& rng) {
  std::vector<double> out(static_cast<std::size_t>(x.dim()));
  k.sample(x.coords(), eta, 1, rng, out);
  return Point(out);
}

Point mean_of(const FrozenKernel& k, std::span<const double> x) {
  std::vector<double> out(x.size());
  k.mean_map(x, out);
  return Point(out);
}

TEST(MvKernel, MeanMapArithmetic) {
  const auto k = mv_kernel(MvParams::quadratic(1, 0.1, 1.0, 0.0));
  ConstantNormalRng zero(0.0);
  EXPECT_NEAR(draw(*k, Point{1.0}, DiscreteMeasure::dirac({5.0}), zero)[0], 0.9, 1e-15);
}

TEST(MvKernel, PureNoiseAtOrigin) {
  const double delta = 0.1;
  const auto k = mv_kernel(MvParams::quadratic(3, delta, 1.0, 0.0));
  ConstantNormalRng one(1.0);
  const Point y = draw(*k, Point{0.0, 0.0, 0.0}, DiscreteMeasure::dirac({0.0, 0.0, 0.0}), one);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[i], std::sqrt(2 * delta), 1e-15);
}

TEST(MvKernel, SingleAtomInteraction) {
  const double delta = 0.2, kappa = 1.5;
  const auto k = mv_kernel(MvParams::quadratic(2, delta, 0.0, kappa));
  ConstantNormalRng zero(0.0);
  const Point x{1.0, -2.0}, y{0.5, 3.0};
  const Point out = draw(*k, x, DiscreteMeasure::dirac(y), zero);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(x[i] - out[i], delta * kappa * (x[i] - y[i]), 1e-14);
}

TEST(MvKernel, GaussianDescriptor) {
  const auto k = mv_kernel(MvParams::quadratic(2, 0.05, 1.0, 1.0));
  const auto frozen = k->freeze(DiscreteMeasure::dirac({0.0, 0.0}), 1);
  EXPECT_TRUE(frozen->gaussian());
  EXPECT_NEAR(frozen->noise_sd(), std::sqrt(0.1), 1e-15);
  EXPECT_EQ(k->name(), "mckean-vlasov-em");
}

TEST(MvKernel, ExactGaussianStep) {
  const double delta = 0.1, lambda = 1.0, kappa = 0.5;
  const auto k = mv_kernel(MvParams::quadratic(1, delta, lambda, kappa));
  MeanFieldFlow flow;
  flow.law = MixtureLaw::single(GaussianLaw{{2.0}, 0.5});
  ASSERT_TRUE(k->has_exact_step(flow));
  double m = 2.0, v = 0.25;
  for (int n = 0; n < 5; ++n) {
    flow = k->advance_exact(flow);
    // One Gaussian: the interaction pulls toward its own mean, so only lambda moves the mean.
    m = (1 - delta * lambda) * m;
    v = std::pow(1 - delta * (lambda + kappa), 2) * v + 2 * delta;
    const auto& g = std::get<GaussianLaw>(std::get<MixtureLaw>(flow.law).components[0]);
    EXPECT_NEAR(g.mean[0], m, 1e-14);
    EXPECT_NEAR(g.sd * g.sd, v, 1e-14);
  }
  MvParams dw = MvParams::double_well(1, 0.05, 2.0, 0.0);
  EXPECT_FALSE(mv_kernel(dw)->has_exact_step(flow));
}

TEST(ConvGradW, Examples) {
  const Point x{1.0, 2.0};
  const auto zero = conv_grad_w(x.coords(), DiscreteMeasure::dirac({3.0, 3.0}), VectorField::zero());
  EXPECT_EQ(zero, (Point{0.0, 0.0}));
  const auto one = conv_grad_w(x.coords(), DiscreteMeasure::dirac({3.0, -1.0}), VectorField::linear(1.0));
  EXPECT_NEAR(one[0], -2.0, 1e-15);
  EXPECT_NEAR(one[1], 3.0, 1e-15);
  const auto two = conv_grad_w(x.coords(), DiscreteMeasure::uniform(PointCloud(2, {0.0, 0.0, 4.0, 2.0})),
                               VectorField::linear(1.0));
  EXPECT_NEAR(two[0], 1.0 - 2.0, 1e-15);
  EXPECT_NEAR(two[1], 2.0 - 1.0, 1e-15);
  EXPECT_THROW(conv_grad_w(x.coords(), DiscreteMeasure::dirac({1.0}), VectorField::zero()), std::invalid_argument);
}

TEST(ConvGradW, LipschitzInBothArguments) {
  std::mt19937_64 gen(1);
  const double C_W = 1.7;
  for (int rep = 0; rep < 100; ++rep) {
    const auto pts = random_cloud(gen, 2, 2, 3.0);
    const std::size_t n1 = 1 + rep % 5, n2 = 1 + rep % 7;
    const DiscreteMeasure mu(random_cloud(gen, 2, n1, 3.0), random_weights(gen, n1));
    const DiscreteMeasure nu(random_cloud(gen, 2, n2, 3.0), random_weights(gen, n2));
    const Point a = conv_grad_w(pts[0], mu, VectorField::linear(C_W));
    const Point b = conv_grad_w(pts[1], nu, VectorField::linear(C_W));
    EXPECT_LE(distance(a.coords(), b.coords()),
              C_W * distance(pts[0], pts[1]) + C_W * w1_exact(mu, nu).distance + 1e-9);
  }
}

TEST(MvParams, Validation) {
  auto p = MvParams::quadratic(1, 0.1, 1.0, 1.0);
  EXPECT_NO_THROW(p.validate());
  p.C_V = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = MvParams::quadratic(1, 0.1, 1.0, 1.0);
  p.delta = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  const auto dw = MvParams::double_well(2, 0.01, 2.0, 0.0);
  EXPECT_EQ(dw.lambda_V, -1.0);
  EXPECT_EQ(dw.C_V, 11.0);
  EXPECT_EQ(MvParams::double_well(2, 0.01, 0.5, 0.0).C_V, 1.0);
}

TEST(MvParams, AuditBuiltinsAndUserFields) {
  EXPECT_TRUE(audit_mv_params(MvParams::quadratic(2, 0.1, 1.5, 0.7)).empty());
  EXPECT_TRUE(audit_mv_params(MvParams::double_well(2, 0.01, 2.0, 0.5)).empty());
  MvParams user = MvParams::quadratic(2, 0.1, 1.0, 0.0);
  user.grad_V = VectorField::user([](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 3.0 * x[i];
  });
  EXPECT_FALSE(audit_mv_params(user).empty());
}

TEST(MvTau1Bound, Examples) {
  EXPECT_NEAR(mv_tau1_bound(MvParams::quadratic(2, 1e-12, 1.0, 1.0)).value, 1.0, 1e-9);
  const auto b = mv_tau1_bound(MvParams::quadratic(2, 0.1, 1.0, 1.0));
  EXPECT_NEAR(b.value, 0.8 + std::sqrt(2.0) * 0.1, 1e-15);
  EXPECT_NEAR(b.value, 0.941421, 1e-6);
  EXPECT_NEAR(b.c, 0.8, 1e-15);
  EXPECT_NEAR(b.C, std::sqrt(2.0) * 0.1, 1e-15);
  const auto noW = mv_tau1_bound(MvParams::quadratic(1, 0.3, 2.0, 0.0));
  EXPECT_NEAR(noW.value, std::sqrt(1 - 2 * 0.3 * 2 + 0.09 * 4), 1e-15);
  EXPECT_EQ(noW.C, 0.0);
}

TEST(MvTau1Bound, NegativeRadicandNamesInterval) {
  MvParams p = MvParams::quadratic(1, 0.5, 0.0, 0.0);
  p.lambda_V = 2.0;
  p.C_V = 0.5;
  try {
    mv_tau1_bound(p);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("delta in"), std::string::npos);
  }
}

TEST(MvMomentConstants, Examples) {
  const auto a = mv_moment_constants(MvParams::quadratic(1, 0.05, 2.0, 0.0));
  EXPECT_NEAR(a.a(1), 0.94, 1e-15);
  EXPECT_NEAR(a.b(1), 0.0, 1e-15);
  EXPECT_NEAR(a.c, 0.1, 1e-15);
  const auto b = mv_moment_constants(MvParams::quadratic(2, 0.1, 1.0, 1.0));
  EXPECT_NEAR(b.a(1), 0.88, 1e-15);
  EXPECT_NEAR(b.b(1), 0.24, 1e-15);
  EXPECT_NEAR(b.c, 0.4, 1e-15);
  const auto z = mv_moment_constants(MvParams::quadratic(2, 1e-12, 1.0, 1.0));
  EXPECT_NEAR(z.a(1), 1.0, 1e-9);
  EXPECT_NEAR(z.b(1), 0.0, 1e-9);
  EXPECT_NEAR(z.c, 0.0, 1e-9);
}

TEST(MvKernel, FrozenContractionBelowBound) {
  const auto params = MvParams::quadratic(2, 0.1, 1.0, 1.0);
  const auto k = mv_kernel(params);
  std::mt19937_64 gen(2);
  ContractionOptions options;
  options.budget = 500;
  for (int rep = 0; rep < 5; ++rep) {
    const auto eta = DiscreteMeasure::uniform(random_cloud(gen, 2, 6, 2.0));
    options.seed = rep;
    EXPECT_LE(dirac_contraction_estimate(*k->freeze(eta, 1), options).estimate, mv_tau1_bound(params).value + 0.02);
  }
}

TEST(MvKernel, TwoSidedRegularity) {
  const auto params = MvParams::quadratic(2, 0.1, 0.5, 1.2);
  const auto k = mv_kernel(params);
  const auto [c, C] = std::pair{mv_tau1_bound(params).c, mv_tau1_bound(params).C};
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 100; ++rep) {
    const auto xy = random_cloud(gen, 2, 2, 3.0);
    const std::size_t n1 = 1 + rep % 6, n2 = 1 + rep % 4;
    const DiscreteMeasure mu(random_cloud(gen, 2, n1, 3.0), random_weights(gen, n1));
    const DiscreteMeasure nu(random_cloud(gen, 2, n2, 3.0), random_weights(gen, n2));
    const Point mx = mean_of(*k->freeze(mu, 1), xy[0]);
    const Point my = mean_of(*k->freeze(nu, 1), xy[1]);
    EXPECT_LE(w2_gaussian_equal_cov(mx, my), c * distance(xy[0], xy[1]) + C * w1_exact(mu, nu).distance + 1e-9);
  }
}

TEST(MvKernel, OneStepMomentDrift) {
  const auto params = MvParams::quadratic(2, 0.1, 1.0, 1.0);
  const auto k = mv_kernel(params);
  const auto dc = mv_moment_constants(params);
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_cloud(gen, 2, 1, 3.0);
    const auto eta = DiscreteMeasure::uniform(random_cloud(gen, 2, 4, 3.0));
    const auto frozen = k->freeze(eta, 1);
    const std::size_t M = 10000;
    double s = 0.0, s2 = 0.0;
    std::vector<double> y(2);
    for (std::size_t i = 0; i < M; ++i) {
      CounterRng rng(5, {static_cast<std::uint64_t>(rep), i});
      frozen->sample(x[0], rng, y);
      const double v = y[0] * y[0] + y[1] * y[1];
      s += v;
      s2 += v * v;
    }
    const double mean = s / M;
    const double se = std::sqrt((s2 / M - mean * mean) / M);
    const double bound = dc.a(1) * std::pow(norm(x[0]), 2) + dc.b(1) * moment(eta, LyapunovSpec::power(2)) + dc.c;
    EXPECT_LE(mean, bound + 4 * se);
  }
}

}  // namespace
}  // namespace nlmc
