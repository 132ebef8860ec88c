#include "nlmc/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

// Lower and upper tail masses of N(0, 1) below a and above b, accurate in the tails.
double lower_tail(double a) { return 0.5 * std::erfc(-a / std::numbers::sqrt2); }
double upper_tail(double b) { return 0.5 * std::erfc(b / std::numbers::sqrt2); }

double interval_mass(double a, double b) {
  // Difference taken on the side of the mean where it is not a cancellation of two ~1 values.
  if (a >= 0.0) return upper_tail(a) - upper_tail(b);
  if (b <= 0.0) return lower_tail(b) - lower_tail(a);
  return 1.0 - lower_tail(a) - upper_tail(b);
}

double default_lambda(double G_bar, std::optional<double> lambda) { return lambda ? *lambda : 1.0 / G_bar; }

// sup_{t >= 0} (b + t) t exp(-t^2/2): the largest value of ||z|| ||grad G(z)|| for the
// bounded Gaussian likelihood centred at distance b from the origin (attained on the ray
// through the centre, away from the origin).
double gaussian_g_tilde(double b) {
  auto f = [b](double t) { return (b + t) * t * std::exp(-0.5 * t * t); };
  double best_t = 0.0, best = 0.0;
  const double step = 1e-3;
  for (double t = 0.0; t <= 12.0; t += step) {
    if (f(t) > best) {
      best = f(t);
      best_t = t;
    }
  }
  double lo = std::max(0.0, best_t - step), hi = best_t + step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (f(m1) < f(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return std::max(best, f(0.5 * (lo + hi)));
}

}  // namespace

Potential Potential::constant(double g, std::optional<double> lambda) {
  if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("Potential::constant: g must be positive");
  Potential p;
  p.G = [g](std::span<const double>) { return g; };
  p.eps = g;
  p.G_bar = g;
  p.lip_G = 0.0;
  p.grad_G_inf = 0.0;
  p.G_tilde = 0.0;
  p.lambda = default_lambda(g, lambda);
  p.name = "constant";
  p.validate();
  return p;
}

Potential Potential::bounded_gaussian(std::span<const double> y_obs, double eps0, std::optional<double> lambda) {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw std::invalid_argument("Potential::bounded_gaussian: eps0 must be > 0");
  const std::vector<double> y(y_obs.begin(), y_obs.end());
  Potential p;
  p.G = [y, eps0](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
    return eps0 + std::exp(-0.5 * r2);
  };
  p.eps = eps0;
  p.G_bar = eps0 + 1.0;
  p.lip_G = std::exp(-0.5);
  p.grad_G_inf = std::exp(-0.5);
  p.G_tilde = gaussian_g_tilde(norm(y));
  p.lambda = default_lambda(p.G_bar, lambda);
  p.name = "bounded-gaussian";
  p.validate();
  return p;
}

Potential Potential::user(std::function<double(std::span<const double>)> G, double eps, double G_bar,
                          std::optional<double> lambda, std::string name) {
  if (!G) throw std::invalid_argument("Potential::user: missing G");
  Potential p;
  p.G = std::move(G);
  p.eps = eps;
  p.G_bar = G_bar;
  p.lambda = default_lambda(G_bar, lambda);
  p.name = std::move(name);
  p.validate();
  return p;
}

void Potential::validate() const {
  if (!G) throw std::invalid_argument("Potential: missing G");
  if (!(eps > 0.0) || !(G_bar >= eps) || !std::isfinite(G_bar)) {
    throw std::invalid_argument("Potential: need 0 < eps <= G_bar < inf");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("Potential: lambda must lie in (0, 1]");
  // 1/G_bar * G_bar can round to one ulp above 1.
  if (lambda * G_bar > 1.0 + 4 * std::numeric_limits<double>::epsilon()) {
    throw std::invalid_argument("Potential: lambda * G_bar must be <= 1");
  }
}

std::vector<std::string> audit_potential(const Potential& G, int dim, double half_width,
                                         std::size_t points_per_axis) {
  G.validate();
  if (dim < 1 || points_per_axis < 2) throw std::invalid_argument("audit_potential: bad grid");
  // Keep the total point count manageable in higher dimensions.
  std::size_t per_axis = points_per_axis;
  while (per_axis > 2 && std::pow(static_cast<double>(per_axis), dim) > 2e5) per_axis = per_axis / 2 + 1;
  const auto d = static_cast<std::size_t>(dim);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  double lo = INFINITY, hi = -INFINITY;
  while (true) {
    for (std::size_t a = 0; a < d; ++a) {
      x[a] = -half_width + 2.0 * half_width * static_cast<double>(idx[a]) / static_cast<double>(per_axis - 1);
    }
    const double g = G(x);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
    std::size_t a = 0;
    while (a < d && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == d) break;
  }
  std::vector<std::string> warnings;
  if (lo < G.eps) warnings.push_back("G falls to " + std::to_string(lo) + " below eps = " + std::to_string(G.eps));
  if (hi > G.G_bar) warnings.push_back("G reaches " + std::to_string(hi) + " above G_bar = " + std::to_string(G.G_bar));
  if (G.lambda * hi > 1.0) warnings.push_back("lambda G exceeds 1 on the audit grid");
  return warnings;
}

void GaussianMutation::validate() const {
  if (!std::isfinite(rho) || !(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("GaussianMutation: need finite rho and sigma >= 0");
  }
}

void GaussianMutation::sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = rho * x[i] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
}

FkModel FkModel::from_observations(const std::vector<double>& observations, double eps0, GaussianMutation mutation) {
  if (observations.empty()) throw std::invalid_argument("FkModel: need at least one observation");
  FkModel model;
  model.dim = 1;
  for (const double y : observations) {
    const double obs[1] = {y};
    model.potentials.push_back(Potential::bounded_gaussian(obs, eps0));
  }
  model.mutations = {mutation};
  model.validate();
  return model;
}

const Potential& FkModel::potential(std::size_t n) const {
  if (potentials.size() == 1) return potentials[0];
  if (n >= potentials.size()) {
    throw std::out_of_range("FkModel: potential G_" + std::to_string(n) + " beyond the configured horizon");
  }
  return potentials[n];
}

const GaussianMutation& FkModel::mutation(std::size_t n) const {
  if (n == 0) throw std::out_of_range("FkModel: mutations are numbered from 1");
  if (mutations.size() == 1) return mutations[0];
  if (n > mutations.size()) {
    throw std::out_of_range("FkModel: mutation M^(" + std::to_string(n) + ") beyond the configured horizon");
  }
  return mutations[n - 1];
}

std::optional<std::size_t> FkModel::horizon() const {
  std::optional<std::size_t> h;
  if (potentials.size() > 1) h = potentials.size();
  if (mutations.size() > 1) h = h ? std::min(*h, mutations.size()) : mutations.size();
  return h;
}

void FkModel::validate() const {
  if (dim < 1) throw std::invalid_argument("FkModel: dim must be >= 1");
  if (potentials.empty() || mutations.empty()) throw std::invalid_argument("FkModel: need potentials and mutations");
  for (const auto& p : potentials) p.validate();
  for (const auto& m : mutations) m.validate();
}

DiscreteMeasure boltzmann_gibbs(const DiscreteMeasure& eta, const Potential& G) {
  std::vector<double> w(eta.size());
  double total = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    w[i] = eta.weight(i) * G(eta.atom(i));
    total += w[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("boltzmann_gibbs: eta(G) must be positive and finite");
  }
  for (auto& v : w) v /= total;
  return DiscreteMeasure(eta.support(), std::move(w));
}

namespace {

double acceptance(const Potential& G, std::span<const double> x) {
  const double p = G.lambda * G(x);
  if (p > 1.0 + 4 * std::numeric_limits<double>::epsilon() || !(p >= 0.0)) {
    throw std::invalid_argument("selection: lambda G(x) = " + std::to_string(p) + " outside [0, 1]");
  }
  return p;
}

}  // namespace

Point selection_sample(std::span<const double> x, const DiscreteMeasure& eta, const Potential& G, RandomStream& rng) {
  if (static_cast<int>(x.size()) != eta.dim()) throw std::invalid_argument("selection_sample: dimension mismatch");
  const double keep = acceptance(G, x);
  if (rng.uniform() < keep) return Point(std::vector<double>(x.begin(), x.end()));
  const DiscreteMeasure psi = boltzmann_gibbs(eta, G);
  const DiscreteSampler sampler(psi.weights());
  const auto y = psi.atom(sampler(rng));
  return Point(std::vector<double>(y.begin(), y.end()));
}

DiscreteMeasure selection_pushforward(const DiscreteMeasure& eta, const Potential& G) {
  const DiscreteMeasure psi = boltzmann_gibbs(eta, G);
  std::vector<double> keep(eta.size());
  double rejected = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    keep[i] = acceptance(G, eta.atom(i));
    rejected += eta.weight(i) * (1.0 - keep[i]);
  }
  std::vector<double> w(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) w[i] = eta.weight(i) * keep[i] + rejected * psi.weight(i);
  return DiscreteMeasure(eta.support(), std::move(w));
}

GridTransition::GridTransition(std::size_t points, double half_width, const GaussianMutation& mutation)
    : half_width_(half_width), first_(points), rows_(points), leakage_(points) {
  mutation.validate();
  if (points < 2 || !(half_width > 0.0)) throw std::invalid_argument("GridTransition: need >= 2 points and L > 0");
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  const double edge = half_width + h / 2;
  auto point = [&](std::size_t j) { return -half_width + h * static_cast<double>(j); };
  auto clamp_index = [&](double v) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(points - 1)));
  };
  for (std::size_t i = 0; i < points; ++i) {
    const double m = mutation.rho * point(i);
    if (mutation.sigma == 0.0) {
      if (std::fabs(m) > edge) {
        first_[i] = 0;
        leakage_[i] = 1.0;
        continue;
      }
      first_[i] = clamp_index(std::round((m + half_width) / h));
      rows_[i] = {1.0};
      continue;
    }
    const double s = mutation.sigma;
    const std::size_t lo = clamp_index(std::floor((m - 40.0 * s + half_width) / h));
    const std::size_t hi = clamp_index(std::ceil((m + 40.0 * s + half_width) / h));
    first_[i] = lo;
    rows_[i].resize(hi - lo + 1);
    for (std::size_t j = lo; j <= hi; ++j) {
      rows_[i][j - lo] = interval_mass((point(j) - h / 2 - m) / s, (point(j) + h / 2 - m) / s);
    }
    leakage_[i] = lower_tail((-edge - m) / s) + upper_tail((edge - m) / s);
  }
}

std::vector<double> GridTransition::apply(const std::vector<double>& weights, double* leaked) const {
  if (weights.size() != size()) throw std::invalid_argument("GridTransition: grid size mismatch");
  std::vector<double> out(size(), 0.0);
  double lost = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    lost += w * leakage_[i];
    const auto& row = rows_[i];
    double row_sum = 0.0;
    for (const double v : row) row_sum += v;
    if (row_sum == 0.0) continue;
    for (std::size_t k = 0; k < row.size(); ++k) out[first_[i] + k] += w * row[k] / row_sum;
  }
  if (leaked) *leaked = lost;
  return out;
}

GridMeasure1D grid_flow_step(const GridMeasure1D& flow, const Potential& G, const GridTransition& transition) {
  flow.validate();
  if (flow.size() != transition.size() || flow.half_width != transition.half_width()) {
    throw std::invalid_argument("grid_flow_step: transition built for a different grid");
  }
  std::vector<double> psi(flow.size());
  double total = 0.0;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const double x[1] = {flow.point(i)};
    psi[i] = flow.weights[i] * G(x);
    total += psi[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("grid_flow_step: eta(G) must be positive");
  for (auto& v : psi) v /= total;
  double leaked = 0.0;
  GridMeasure1D out = flow;
  out.weights = transition.apply(psi, &leaked);
  if (leaked > 1e-6) {
    std::ostringstream msg;
    msg << "grid_flow_step: " << leaked << " of the mass left [-" << flow.half_width << ", " << flow.half_width
        << "]; use a larger grid half width";
    throw NumericError(msg.str());
  }
  double sum = 0.0;
  for (const double v : out.weights) sum += v;
  for (auto& v : out.weights) v /= sum;
  return out;
}

namespace {

class FrozenSisr final : public FrozenKernel {
 public:
  FrozenSisr(const Potential& G, const GaussianMutation& mutation, const DiscreteMeasure& eta)
      : G_(G), mutation_(mutation), psi_(boltzmann_gibbs(eta, G)), sampler_(psi_.weights()) {}

  int dim() const override { return psi_.dim(); }

  void sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const override {
    if (rng.uniform() < acceptance(G_, x)) {
      mutation_.sample(x, rng, out);
    } else {
      mutation_.sample(psi_.atom(sampler_(rng)), rng, out);
    }
  }

 private:
  Potential G_;
  GaussianMutation mutation_;
  DiscreteMeasure psi_;
  DiscreteSampler sampler_;
};

class SisrKernel final : public NonlinearKernel {
 public:
  SisrKernel(const FkModel& model, std::optional<std::size_t> fixed_step)
      : model_(std::make_shared<FkModel>(model)), fixed_step_(fixed_step) {
    model_->validate();
    if (fixed_step_) check_step(*fixed_step_);
  }

  int dim() const override { return model_->dim; }
  std::string name() const override { return "feynman-kac-sisr"; }

  std::unique_ptr<FrozenKernel> freeze(const DiscreteMeasure& eta, std::size_t step) const override {
    if (eta.dim() != model_->dim) throw std::invalid_argument("feynman-kac-sisr: measure dimension mismatch");
    const std::size_t n = fixed_step_.value_or(step);
    check_step(n);
    return std::make_unique<FrozenSisr>(model_->potential(n - 1), model_->mutation(n), eta);
  }

  bool has_exact_step(const MeanFieldFlow& flow) const override { return flow.is_grid() && model_->dim == 1; }

  MeanFieldFlow advance_exact(const MeanFieldFlow& flow) const override {
    if (!has_exact_step(flow)) return NonlinearKernel::advance_exact(flow);
    const auto& grid = std::get<GridMeasure1D>(flow.law);
    const std::size_t n = fixed_step_.value_or(flow.step + 1);
    check_step(n);
    MeanFieldFlow out;
    out.law = grid_flow_step(grid, model_->potential(n - 1), transition(grid, model_->mutation(n)));
    out.step = flow.step + 1;
    return out;
  }

 private:
  void check_step(std::size_t n) const {
    if (n == 0) throw std::out_of_range("feynman-kac-sisr: steps are numbered from 1");
    if (const auto h = model_->horizon(); h && n > *h) {
      throw std::out_of_range("feynman-kac-sisr: step " + std::to_string(n) + " beyond the configured horizon " +
                              std::to_string(*h));
    }
  }

  const GridTransition& transition(const GridMeasure1D& grid, const GaussianMutation& m) const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (const auto& entry : cache_) {
      if (entry.points == grid.size() && entry.half_width == grid.half_width && entry.rho == m.rho &&
          entry.sigma == m.sigma) {
        return *entry.transition;
      }
    }
    cache_.push_back({grid.size(), grid.half_width, m.rho, m.sigma,
                      std::make_unique<GridTransition>(grid.size(), grid.half_width, m)});
    return *cache_.back().transition;
  }

  struct CacheEntry {
    std::size_t points;
    double half_width, rho, sigma;
    std::unique_ptr<GridTransition> transition;
  };

  std::shared_ptr<const FkModel> model_;
  std::optional<std::size_t> fixed_step_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<CacheEntry> cache_;
};

}  // namespace

std::unique_ptr<NonlinearKernel> sisr_kernel(const FkModel& model, std::optional<std::size_t> fixed_step) {
  return std::make_unique<SisrKernel>(model, fixed_step);
}

DriftConstants fk_moment_constants(double a_tilde, double lambda, double G_bar, double eps, double c) {
  if (!(eps > 0.0) || !(G_bar >= eps) || !std::isfinite(G_bar)) {
    throw std::invalid_argument("fk_moment_constants: need 0 < eps <= G_bar < inf");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("fk_moment_constants: lambda must lie in (0, 1]");
  if (lambda * G_bar > 1.0 + 4 * std::numeric_limits<double>::epsilon()) {
    throw std::invalid_argument("fk_moment_constants: need lambda G_bar <= 1");
  }
  if (!(a_tilde > 0.0) || !std::isfinite(a_tilde)) throw std::invalid_argument("fk_moment_constants: a_tilde must be > 0");
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("fk_moment_constants: c must be >= 0");
  const double a = a_tilde * lambda * G_bar;
  const double b = a_tilde * G_bar * (1.0 - lambda * eps) / eps;
  const double sum = a_tilde * G_bar / eps;
  if (std::fabs(a + b - sum) > 1e-12 * std::max(1.0, sum)) {
    throw NumericError("fk_moment_constants: a + b differs from a_tilde G_bar / eps");
  }
  return DriftConstants::homogeneous(a, b, c, LyapunovSpec::power(2.0));
}

double psi_tau1_bound(const Potential& G, double M1_nu) {
  G.validate();
  if (std::isnan(G.lip_G) || std::isnan(G.grad_G_inf) || std::isnan(G.G_tilde)) {
    throw std::invalid_argument("psi_tau1_bound: regularity constants of G are not declared");
  }
  if (!(M1_nu >= 0.0) || !std::isfinite(M1_nu)) throw std::invalid_argument("psi_tau1_bound: M1(nu) must be >= 0");
  return (G.grad_G_inf + G.G_tilde + G.G_bar) / G.eps + G.lip_G * G.G_bar * M1_nu / (G.eps * G.eps);
}

double phi_tau1_bound(const Potential& G, double M1_nu, double tau_mutation) {
  if (!(tau_mutation >= 0.0)) throw std::invalid_argument("phi_tau1_bound: tau_1(M) must be >= 0");
  return psi_tau1_bound(G, M1_nu) * tau_mutation;
}

}  // namespace nlmc
