#include "nlmc/particles.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "nlmc/parallel.hpp"

namespace nlmc {

namespace {

// Mixture sampler with per-component atom samplers built once.
class MixtureSampler {
 public:
  explicit MixtureSampler(const MixtureLaw& law) : law_(law), pick_(law.weights) {
    for (const auto& c : law.components) {
      if (const auto* atoms = std::get_if<DiscreteMeasure>(&c)) {
        atom_samplers_.emplace_back(std::make_unique<DiscreteSampler>(atoms->weights()));
      } else {
        atom_samplers_.emplace_back(nullptr);
      }
    }
  }

  void operator()(RandomStream& rng, std::span<double> out) const {
    const std::size_t c = law_.components.size() == 1 ? 0 : pick_(rng);
    if (atom_samplers_[c]) {
      const auto& atoms = std::get<DiscreteMeasure>(law_.components[c]);
      const auto x = atoms.atom((*atom_samplers_[c])(rng));
      std::copy(x.begin(), x.end(), out.begin());
    } else {
      sample_component(law_.components[c], rng, out);
    }
  }

 private:
  const MixtureLaw& law_;
  DiscreteSampler pick_;
  std::vector<std::unique_ptr<DiscreteSampler>> atom_samplers_;
};

bool purely_atomic(const MixtureLaw& law) {
  return std::all_of(law.components.begin(), law.components.end(),
                     [](const auto& c) { return std::holds_alternative<DiscreteMeasure>(c); });
}

DiscreteMeasure atomic_mixture_measure(const MixtureLaw& law) {
  PointCloud support(law.dim(), std::vector<double>{});
  std::vector<double> weights;
  for (std::size_t c = 0; c < law.components.size(); ++c) {
    const auto& atoms = std::get<DiscreteMeasure>(law.components[c]);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      support.push_back(atoms.atom(i));
      weights.push_back(law.weights[c] * atoms.weight(i));
    }
  }
  double total = 0.0;
  for (const double w : weights) total += w;
  for (auto& w : weights) w /= total;
  return DiscreteMeasure(std::move(support), std::move(weights));
}

}  // namespace

TransportOptions transport_for(std::size_t n1, std::size_t n2) {
  TransportOptions options;
  options.atom_cap = std::max(options.atom_cap, n1 + n2);
  options.keep_plan = false;
  return options;
}

ParticleEnsemble initialize_ensemble(const MeanFieldFlow& eta0, std::size_t n, std::uint64_t master_seed,
                                     std::uint64_t trial, std::uint64_t cell) {
  if (n == 0) throw std::invalid_argument("initialize_ensemble: N must be >= 1");
  ParticleEnsemble ens;
  ens.master_seed = master_seed;
  ens.trial = trial;
  ens.cell = cell;
  ens.step = 0;
  ens.particles = PointCloud(eta0.dim(), n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(master_seed, {stream_tag::kInit, cell, trial, i});
    const PointCloud one = sample_flow(eta0, 1, rng);
    const auto x = one[0];
    std::copy(x.begin(), x.end(), ens.particles.mutable_row(i).begin());
  }
  return ens;
}

ParticleEnsemble ips_step(const ParticleEnsemble& ens, const NonlinearKernel& kernel, const StepOptions& options) {
  if (kernel.dim() != ens.dim()) throw std::invalid_argument("ips_step: kernel and ensemble dimensions differ");
  const std::size_t n = ens.size();
  const std::size_t next = ens.step + 1;
  // All particles condition on the same empirical measure of the current step.
  const auto frozen = kernel.freeze(ens.empirical(), next);

  ParticleEnsemble out = ens;
  out.step = next;
  parallel_for(n, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto row = out.particles.mutable_row(i);
      if (options.stream_override) {
        auto rng = options.stream_override(i);
        frozen->sample(ens.particles[i], *rng, row);
      } else {
        CounterRng rng(ens.master_seed, {stream_tag::kStep, ens.cell, ens.trial, i, next});
        frozen->sample(ens.particles[i], rng, row);
      }
    }
  });
  return out;
}

MeanFieldFlow mean_field_step(const MeanFieldFlow& flow, const NonlinearKernel& kernel,
                              const MeanFieldOptions& options) {
  if (kernel.has_exact_step(flow)) return kernel.advance_exact(flow);
  const auto* cloud = std::get_if<SurrogateCloud>(&flow.law);
  if (cloud == nullptr || !options.allow_surrogate) {
    throw std::invalid_argument("mean_field_step: kernel '" + kernel.name() +
                                "' has no exact step for this flow and no surrogate is allowed");
  }
  ParticleEnsemble ens;
  ens.particles = cloud->particles;
  ens.step = flow.step;
  ens.master_seed = cloud->seed;
  ens.cell = stream_tag::kSurrogate;
  StepOptions step_options;
  step_options.threads = options.threads;
  const ParticleEnsemble next = ips_step(ens, kernel, step_options);
  MeanFieldFlow out = flow;
  std::get<SurrogateCloud>(out.law).particles = next.particles;
  out.step = next.step;
  return out;
}

MeanFieldFlow make_surrogate(const MeanFieldFlow& eta0, std::size_t m, std::uint64_t seed) {
  CounterRng rng(seed, {stream_tag::kSurrogate});
  SurrogateCloud cloud;
  cloud.particles = sample_flow(eta0, m, rng);
  cloud.seed = seed;
  cloud.bias_note = "surrogate mean-field cloud of M=" + std::to_string(m) +
                    " particles; reference bias of order M^(-1/d)";
  MeanFieldFlow out;
  out.law = std::move(cloud);
  out.step = eta0.step;
  return out;
}

PointCloud sample_flow(const MeanFieldFlow& flow, std::size_t count, RandomStream& rng) {
  const int d = flow.dim();
  PointCloud out(d, count);
  if (const auto* mixture = std::get_if<MixtureLaw>(&flow.law)) {
    mixture->validate();
    const MixtureSampler sampler(*mixture);
    for (std::size_t i = 0; i < count; ++i) sampler(rng, out.mutable_row(i));
  } else if (const auto* grid = std::get_if<GridMeasure1D>(&flow.law)) {
    const DiscreteSampler sampler(grid->weights);
    for (std::size_t i = 0; i < count; ++i) out.mutable_row(i)[0] = grid->point(sampler(rng));
  } else {
    const auto& cloud = std::get<SurrogateCloud>(flow.law).particles;
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = cloud[rng.index(cloud.size())];
      std::copy(x.begin(), x.end(), out.mutable_row(i).begin());
    }
  }
  return out;
}

ReferenceDistance estimate_w1_to_reference(const ParticleEnsemble& ens, const MeanFieldFlow& flow,
                                           std::size_t ref_size, const CostSpec& cost, RandomStream& rng,
                                           const TransportOptions& transport) {
  if (ens.dim() != flow.dim()) throw std::invalid_argument("estimate_w1_to_reference: dimension mismatch");
  const DiscreteMeasure particles = ens.empirical();
  ReferenceDistance out;

  auto solve = [&](const DiscreteMeasure& reference) {
    TransportOptions options = transport;
    options.keep_plan = false;
    options.atom_cap = std::max(options.atom_cap, particles.size() + reference.size());
    return w1_exact(particles, reference, cost, options).distance;
  };

  if (const auto* grid = std::get_if<GridMeasure1D>(&flow.law)) {
    out.exact = true;
    out.note = "exact against the grid law";
    out.distance = cost.is_w1() ? w1_sorted_1d(particles, grid->as_measure()) : solve(grid->as_measure());
    return out;
  }
  if (const auto* mixture = std::get_if<MixtureLaw>(&flow.law); mixture && purely_atomic(*mixture)) {
    out.exact = true;
    out.note = "exact against the atomic law";
    out.distance = solve(atomic_mixture_measure(*mixture));
    return out;
  }
  if (const auto* cloud = std::get_if<SurrogateCloud>(&flow.law)) {
    out.exact = true;
    out.reference_size = cloud->particles.size();
    out.note = cloud->bias_note;
    out.distance = solve(DiscreteMeasure::uniform(cloud->particles));
    return out;
  }
  if (ref_size == 0) throw std::invalid_argument("estimate_w1_to_reference: reference size must be positive");
  const PointCloud reference = sample_flow(flow, ref_size, rng);
  out.reference_size = ref_size;
  out.note = "two-cloud estimate against " + std::to_string(ref_size) + " i.i.d. reference draws";
  out.distance = ens.dim() == 1 && cost.is_w1()
                     ? w1_sorted_1d(particles, DiscreteMeasure::uniform(reference))
                     : solve(DiscreteMeasure::uniform(reference));
  return out;
}

}  // namespace nlmc
