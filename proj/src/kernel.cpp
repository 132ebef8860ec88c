#include "nlmc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlmc {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

int component_dim(const MixtureComponent& c) {
  return std::visit(
      [](const auto& law) -> int {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, DiscreteMeasure>) {
          return law.dim();
        } else if constexpr (std::is_same_v<T, UniformBox>) {
          return law.dim;
        } else {
          return static_cast<int>(law.mean.size());
        }
      },
      c);
}

}  // namespace

MixtureLaw MixtureLaw::single(MixtureComponent component) {
  MixtureLaw law;
  law.weights = {1.0};
  law.components.push_back(std::move(component));
  return law;
}

int MixtureLaw::dim() const { return components.empty() ? 0 : component_dim(components.front()); }

void MixtureLaw::validate() const {
  if (components.empty() || components.size() != weights.size()) {
    throw std::invalid_argument("MixtureLaw: need one weight per component");
  }
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("MixtureLaw: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("MixtureLaw: weights do not sum to 1");
  const int d = dim();
  for (const auto& c : components) {
    if (component_dim(c) != d) throw std::invalid_argument("MixtureLaw: mixed dimensions");
    if (const auto* box = std::get_if<UniformBox>(&c); box && !(box->half_width > 0.0)) {
      throw std::invalid_argument("MixtureLaw: box half width must be positive");
    }
    if (const auto* g = std::get_if<GaussianLaw>(&c); g && !(g->sd >= 0.0)) {
      throw std::invalid_argument("MixtureLaw: negative standard deviation");
    }
  }
}

void MixtureLaw::simplify() {
  std::vector<double> w;
  std::vector<MixtureComponent> c;
  for (std::size_t i = 0; i < components.size(); ++i) {
    bool merged = false;
    for (std::size_t k = 0; k < c.size() && !merged; ++k) {
      const auto* a = std::get_if<UniformBox>(&components[i]);
      const auto* b = std::get_if<UniformBox>(&c[k]);
      if (a && b && a->dim == b->dim && a->half_width == b->half_width) merged = true;
      const auto* ga = std::get_if<GaussianLaw>(&components[i]);
      const auto* gb = std::get_if<GaussianLaw>(&c[k]);
      if (ga && gb && ga->mean == gb->mean && ga->sd == gb->sd) merged = true;
      if (merged) w[k] += weights[i];
    }
    if (!merged) {
      w.push_back(weights[i]);
      c.push_back(components[i]);
    }
  }
  weights = std::move(w);
  components = std::move(c);
}

GridMeasure1D GridMeasure1D::zeros(std::size_t points, double half_width) {
  if (points < 2 || !(half_width > 0.0)) throw std::invalid_argument("GridMeasure1D: need >= 2 points and L > 0");
  GridMeasure1D g;
  g.half_width = half_width;
  g.weights.assign(points, 0.0);
  return g;
}

GridMeasure1D GridMeasure1D::discretized_gaussian(std::size_t points, double half_width, double mean, double sd) {
  GridMeasure1D g = zeros(points, half_width);
  if (sd == 0.0) {
    const double pos = (mean + half_width) / g.spacing();
    const auto i = static_cast<std::size_t>(std::clamp(std::round(pos), 0.0, static_cast<double>(points - 1)));
    g.weights[i] = 1.0;
    return g;
  }
  const double h = g.spacing();
  double total = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double lo = i == 0 ? -INFINITY : g.point(i) - h / 2;
    const double hi = i + 1 == points ? INFINITY : g.point(i) + h / 2;
    g.weights[i] = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
    total += g.weights[i];
  }
  for (auto& w : g.weights) w /= total;
  return g;
}

void GridMeasure1D::validate() const {
  if (weights.size() < 2 || !(half_width > 0.0)) throw std::invalid_argument("GridMeasure1D: need >= 2 points and L > 0");
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("GridMeasure1D: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("GridMeasure1D: weights do not sum to 1");
}

DiscreteMeasure GridMeasure1D::as_measure() const {
  std::vector<double> pts(weights.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = point(i);
  return DiscreteMeasure(PointCloud(1, std::move(pts)), weights);
}

int MeanFieldFlow::dim() const {
  return std::visit(
      [](const auto& l) -> int {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, MixtureLaw>) {
          return l.dim();
        } else if constexpr (std::is_same_v<T, GridMeasure1D>) {
          return 1;
        } else {
          return l.particles.dim();
        }
      },
      law);
}

void FrozenKernel::mean_map(std::span<const double>, std::span<double>) const {
  throw std::logic_error("FrozenKernel: no Gaussian structure");
}

double FrozenKernel::noise_sd() const { throw std::logic_error("FrozenKernel: no Gaussian structure"); }

MeanFieldFlow NonlinearKernel::advance_exact(const MeanFieldFlow&) const {
  throw std::invalid_argument(name() + ": no exact mean-field step for this flow representation");
}

void NonlinearKernel::sample(std::span<const double> x, const DiscreteMeasure& eta, std::size_t step,
                             RandomStream& rng, std::span<double> out) const {
  freeze(eta, step)->sample(x, rng, out);
}

void sample_component(const MixtureComponent& component, RandomStream& rng, std::span<double> out) {
  if (const auto* atoms = std::get_if<DiscreteMeasure>(&component)) {
    const std::size_t i = DiscreteSampler(atoms->weights())(rng);
    std::copy_n(atoms->atom(i).begin(), out.size(), out.begin());
  } else if (const auto* box = std::get_if<UniformBox>(&component)) {
    for (auto& v : out) v = box->half_width * (2.0 * rng.uniform() - 1.0);
  } else {
    const auto& g = std::get<GaussianLaw>(component);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = g.mean[k] + g.sd * rng.normal();
  }
}

DiscreteSampler::DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
  if (weights.empty()) throw std::invalid_argument("DiscreteSampler: no weights");
  double running = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    running += weights[i];
    cumulative_[i] = running;
  }
}

std::size_t DiscreteSampler::operator()(RandomStream& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto i = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(i, cumulative_.size() - 1);
}

}  // namespace nlmc
