#include "nlmc/mckean_vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlmc/errors.hpp"
#include "nlmc/rng.hpp"

namespace nlmc {

VectorField::VectorField(Kind kind, double k, Map map) : kind_(kind), k_(k), map_(std::move(map)) {
  switch (kind) {
    case Kind::kZero: name_ = "zero"; break;
    case Kind::kLinear: name_ = "linear"; break;
    case Kind::kDoubleWell: name_ = "double-well"; break;
    case Kind::kUser: name_ = "user"; break;
  }
  if (kind == Kind::kUser && !map_) throw std::invalid_argument("VectorField: user field needs a map");
  if (!std::isfinite(k)) throw std::invalid_argument("VectorField: coefficient must be finite");
}

void VectorField::operator()(std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case Kind::kZero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case Kind::kLinear:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = k_ * x[i];
      return;
    case Kind::kDoubleWell: {
      double r2 = 0.0;
      for (const double v : x) r2 += v * v;
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = (r2 - 1.0) * x[i];
      return;
    }
    case Kind::kUser:
      map_(x, out);
      return;
  }
}

MvParams MvParams::quadratic(int dim, double delta, double lambda_v, double kappa_w) {
  MvParams p;
  p.dim = dim;
  p.delta = delta;
  p.grad_V = lambda_v == 0.0 ? VectorField::zero() : VectorField::linear(lambda_v);
  p.grad_W = kappa_w == 0.0 ? VectorField::zero() : VectorField::linear(kappa_w);
  p.lambda_V = lambda_v;
  p.C_V = std::fabs(lambda_v);
  p.lambda_W = kappa_w;
  p.C_W = std::fabs(kappa_w);
  p.grad_V0_norm = 0.0;
  return p;
}

MvParams MvParams::double_well(int dim, double delta, double radius, double kappa_w) {
  if (!(radius > 0.0)) throw std::invalid_argument("MvParams::double_well: radius must be positive");
  MvParams p = quadratic(dim, delta, 0.0, kappa_w);
  p.grad_V = VectorField::double_well();
  p.lambda_V = -1.0;
  p.C_V = std::max(3.0 * radius * radius - 1.0, 1.0);
  p.audit_radius = radius;
  return p;
}

void MvParams::validate() const {
  if (dim < 1) throw std::invalid_argument("MvParams: dim must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("MvParams: delta must be > 0");
  for (const double v : {lambda_V, lambda_W, C_V, C_W, grad_V0_norm, audit_radius}) {
    if (!std::isfinite(v)) throw std::invalid_argument("MvParams: constants must be finite");
  }
  if (grad_V0_norm < 0.0) throw std::invalid_argument("MvParams: ||grad V(0)|| must be >= 0");
  if (C_V < std::max(lambda_V, 0.0)) throw std::invalid_argument("MvParams: need C_V >= max(lambda_V, 0)");
  if (C_W < std::max(lambda_W, 0.0)) throw std::invalid_argument("MvParams: need C_W >= max(lambda_W, 0)");
  if (grad_W.builtin()) {
    std::vector<double> zero(static_cast<std::size_t>(dim), 0.0), g(zero.size());
    grad_W(zero, g);
    if (norm(g) != 0.0) throw std::invalid_argument("MvParams: built-in grad W must vanish at 0 (W even)");
  }
}

std::vector<std::string> audit_mv_params(const MvParams& params, std::size_t samples, std::uint64_t seed) {
  params.validate();
  const auto d = static_cast<std::size_t>(params.dim);
  const double side = params.audit_radius / std::sqrt(static_cast<double>(d));
  CounterRng rng(seed, {0x4155444954ULL});
  std::vector<double> x(d), y(d), gx(d), gy(d);
  std::vector<std::string> warnings;

  auto audit_field = [&](const VectorField& field, double lambda, double C, const char* label) {
    double worst_lip = 0.0;
    double worst_convex = INFINITY;
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = side * (2.0 * rng.uniform() - 1.0);
        y[i] = side * (2.0 * rng.uniform() - 1.0);
      }
      const double r = distance(x, y);
      if (r == 0.0) continue;
      field(x, gx);
      field(y, gy);
      double gap2 = 0.0, inner = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        gap2 += (gx[i] - gy[i]) * (gx[i] - gy[i]);
        inner += (x[i] - y[i]) * (gx[i] - gy[i]);
      }
      worst_lip = std::max(worst_lip, std::sqrt(gap2) / r);
      worst_convex = std::min(worst_convex, inner / (r * r));
    }
    if (worst_lip > 1.05 * C + 1e-12) {
      std::ostringstream msg;
      msg << label << ": observed Lipschitz ratio " << worst_lip << " exceeds declared C = " << C;
      warnings.push_back(msg.str());
    }
    if (worst_convex < lambda - 0.05 * std::fabs(lambda) - 1e-12) {
      std::ostringstream msg;
      msg << label << ": observed convexity " << worst_convex << " is below declared lambda = " << lambda;
      warnings.push_back(msg.str());
    }
  };
  audit_field(params.grad_V, params.lambda_V, params.C_V, "grad V");
  audit_field(params.grad_W, params.lambda_W, params.C_W, "grad W");

  std::vector<double> zero(d, 0.0), g(d);
  params.grad_V(zero, g);
  if (std::fabs(norm(g) - params.grad_V0_norm) > 0.05 * params.grad_V0_norm + 1e-12) {
    warnings.push_back("grad V(0): observed norm " + std::to_string(norm(g)) + " differs from declared " +
                       std::to_string(params.grad_V0_norm));
  }
  params.grad_W(zero, g);
  if (norm(g) > 1e-12) warnings.push_back("grad W(0) is nonzero: W does not look even");
  return warnings;
}

Point conv_grad_w(std::span<const double> x, const DiscreteMeasure& eta, const VectorField& grad_W) {
  if (static_cast<int>(x.size()) != eta.dim()) throw std::invalid_argument("conv_grad_w: dimension mismatch");
  const std::size_t d = x.size();
  std::vector<double> out(d, 0.0), u(d), g(d);
  if (grad_W.kind() == VectorField::Kind::kZero) return Point(std::move(out));
  for (std::size_t j = 0; j < eta.size(); ++j) {
    const auto y = eta.atom(j);
    for (std::size_t i = 0; i < d; ++i) u[i] = x[i] - y[i];
    grad_W(u, g);
    for (std::size_t i = 0; i < d; ++i) out[i] += eta.weight(j) * g[i];
  }
  return Point(std::move(out));
}

namespace {

class FrozenMv final : public FrozenKernel {
 public:
  FrozenMv(std::shared_ptr<const MvParams> params, const DiscreteMeasure& eta)
      : params_(std::move(params)), eta_(eta), noise_(std::sqrt(2.0 * params_->delta)) {
    // grad W * eta(x) = kappa (x - mean(eta)) for linear W: one pass over eta per step
    // instead of one per particle.
    if (params_->grad_W.is_linear()) eta_mean_ = eta_.mean();
  }

  int dim() const override { return params_->dim; }
  bool gaussian() const override { return true; }
  double noise_sd() const override { return noise_; }

  void mean_map(std::span<const double> x, std::span<double> out) const override {
    const auto d = x.size();
    const double delta = params_->delta;
    std::vector<double> gv(d);
    params_->grad_V(x, gv);
    if (params_->grad_W.is_linear()) {
      const double k = params_->grad_W.coefficient();
      for (std::size_t i = 0; i < d; ++i) out[i] = x[i] - delta * gv[i] - delta * k * (x[i] - eta_mean_[i]);
    } else {
      const Point conv = conv_grad_w(x, eta_, params_->grad_W);
      for (std::size_t i = 0; i < d; ++i) out[i] = x[i] - delta * gv[i] - delta * conv[i];
    }
  }

  void sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const override {
    mean_map(x, out);
    for (auto& v : out) v += noise_ * rng.normal();
  }

 private:
  std::shared_ptr<const MvParams> params_;
  DiscreteMeasure eta_;
  double noise_;
  std::vector<double> eta_mean_;
};

class McKeanVlasovKernel final : public NonlinearKernel {
 public:
  explicit McKeanVlasovKernel(const MvParams& params) : params_(std::make_shared<MvParams>(params)) {
    params_->validate();
  }

  int dim() const override { return params_->dim; }
  std::string name() const override { return "mckean-vlasov-em"; }

  std::unique_ptr<FrozenKernel> freeze(const DiscreteMeasure& eta, std::size_t /*step*/) const override {
    if (eta.dim() != params_->dim) throw std::invalid_argument("mckean-vlasov-em: measure dimension mismatch");
    return std::make_unique<FrozenMv>(params_, eta);
  }

  // With linear fields a Gaussian component N(m_c, s_c^2) maps to
  // N(alpha m_c + delta kappa mbar, alpha^2 s_c^2 + 2 delta), alpha = 1 - delta (lambda + kappa),
  // where mbar is the mean of the whole mixture.
  bool has_exact_step(const MeanFieldFlow& flow) const override {
    const auto* law = std::get_if<MixtureLaw>(&flow.law);
    if (law == nullptr || !params_->grad_V.is_linear() || !params_->grad_W.is_linear()) return false;
    return std::all_of(law->components.begin(), law->components.end(),
                       [](const auto& c) { return std::holds_alternative<GaussianLaw>(c); });
  }

  MeanFieldFlow advance_exact(const MeanFieldFlow& flow) const override {
    if (!has_exact_step(flow)) return NonlinearKernel::advance_exact(flow);
    const auto& law = std::get<MixtureLaw>(flow.law);
    law.validate();
    const auto d = static_cast<std::size_t>(params_->dim);
    const double delta = params_->delta;
    const double lambda = params_->grad_V.coefficient();
    const double kappa = params_->grad_W.coefficient();
    const double alpha = 1.0 - delta * (lambda + kappa);
    std::vector<double> mbar(d, 0.0);
    for (std::size_t c = 0; c < law.components.size(); ++c) {
      const auto& g = std::get<GaussianLaw>(law.components[c]);
      for (std::size_t i = 0; i < d; ++i) mbar[i] += law.weights[c] * g.mean[i];
    }
    MeanFieldFlow out = flow;
    auto& next = std::get<MixtureLaw>(out.law);
    for (auto& component : next.components) {
      auto& g = std::get<GaussianLaw>(component);
      for (std::size_t i = 0; i < d; ++i) g.mean[i] = alpha * g.mean[i] + delta * kappa * mbar[i];
      g.sd = std::sqrt(alpha * alpha * g.sd * g.sd + 2.0 * delta);
    }
    next.simplify();
    out.step = flow.step + 1;
    return out;
  }

 private:
  std::shared_ptr<MvParams> params_;
};

}  // namespace

std::unique_ptr<NonlinearKernel> mv_kernel(const MvParams& params) {
  return std::make_unique<McKeanVlasovKernel>(params);
}

MvTauBound mv_tau1_bound(const MvParams& params) {
  const double delta = params.delta;
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("mv_tau1_bound: delta must be > 0");
  const double s = params.lambda_V + params.lambda_W;
  const double L = params.C_V + params.C_W;
  const double radicand = 1.0 - 2.0 * delta * s + delta * delta * L * L;
  if (radicand < 0.0) {
    std::ostringstream msg;
    msg << "mv_tau1_bound: negative radicand " << radicand << " at delta = " << delta;
    if (L > 0.0) {
      const double disc = std::sqrt(std::max(s * s - L * L, 0.0));
      msg << "; it is negative for delta in (" << (s - disc) / (L * L) << ", " << (s + disc) / (L * L) << ")";
    } else {
      msg << "; it is negative for delta > " << 1.0 / (2.0 * s);
    }
    throw NumericError(msg.str());
  }
  MvTauBound out;
  out.c = std::sqrt(radicand);
  out.C = std::numbers::sqrt2 * delta * params.C_W;
  out.value = out.c + out.C;
  return out;
}

DriftConstants mv_moment_constants(const MvParams& params) {
  params.validate();
  const double delta = params.delta;
  const double a = 1.0 + delta * (2.0 - 2.0 * (params.lambda_V + params.lambda_W)) +
                   4.0 * delta * delta * (params.C_V * params.C_V + params.C_W * params.C_W);
  const double b = delta * (2.0 + 4.0 * delta) * params.C_W * params.C_W;
  const double c = (1.0 + 4.0 * delta) * delta * params.grad_V0_norm * params.grad_V0_norm +
                   2.0 * params.dim * delta;
  return DriftConstants::homogeneous(a, b, c, LyapunovSpec::power(2.0));
}

}  // namespace nlmc
