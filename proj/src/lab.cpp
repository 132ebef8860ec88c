#include "nlmc/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "nlmc/bounds.hpp"
#include "nlmc/errors.hpp"
#include "nlmc/parallel.hpp"
#include "nlmc/particles.hpp"

namespace nlmc {

namespace {

class FrozenSharp final : public FrozenKernel {
 public:
  explicit FrozenSharp(const DiscreteMeasure& eta) : eta_(eta) {
    const auto& w = eta_.weights();
    equal_ = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });
    if (!equal_) sampler_ = std::make_unique<DiscreteSampler>(w);
  }

  int dim() const override { return eta_.dim(); }

  void sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const override {
    const double u = rng.uniform();
    if (u < 1.0 / 3.0) {
      std::copy(x.begin(), x.end(), out.begin());
    } else if (u < 2.0 / 3.0) {
      const std::size_t i = equal_ ? rng.index(eta_.size()) : (*sampler_)(rng);
      const auto y = eta_.atom(i);
      std::copy(y.begin(), y.end(), out.begin());
    } else {
      for (auto& v : out) v = 2.0 * rng.uniform() - 1.0;
    }
  }

 private:
  DiscreteMeasure eta_;
  bool equal_ = true;
  std::unique_ptr<DiscreteSampler> sampler_;
};

class SharpMixtureKernel final : public NonlinearKernel {
 public:
  explicit SharpMixtureKernel(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("sharp_mixture_kernel: d must be >= 1");
  }

  int dim() const override { return dim_; }
  std::string name() const override { return "sharp-mixture"; }

  std::unique_ptr<FrozenKernel> freeze(const DiscreteMeasure& eta, std::size_t /*step*/) const override {
    if (eta.dim() != dim_) throw std::invalid_argument("sharp-mixture: measure dimension mismatch");
    return std::make_unique<FrozenSharp>(eta);
  }

  bool has_exact_step(const MeanFieldFlow& flow) const override {
    return flow.is_mixture() && flow.dim() == dim_;
  }

  MeanFieldFlow advance_exact(const MeanFieldFlow& flow) const override {
    if (!has_exact_step(flow)) return NonlinearKernel::advance_exact(flow);
    MeanFieldFlow out = flow;
    auto& law = std::get<MixtureLaw>(out.law);
    law.validate();
    for (auto& w : law.weights) w *= 2.0 / 3.0;
    law.weights.push_back(1.0 / 3.0);
    law.components.emplace_back(UniformBox{dim_, 1.0});
    law.simplify();
    out.step = flow.step + 1;
    return out;
  }

 private:
  int dim_;
};

double box_second_moment(const UniformBox& box) { return box.dim * box.half_width * box.half_width / 3.0; }

double gaussian_second_moment(const GaussianLaw& g) {
  double m = 0.0;
  for (const double v : g.mean) m += v * v;
  return m + static_cast<double>(g.mean.size()) * g.sd * g.sd;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

// Bound on E W(eta^N_n, eta_n) (q = 1 without the tuple term) or on the q-marginal
// distance (q > 1, tuple term included where the variant has one).
double bound_value(const ExperimentConfig& cfg, const std::vector<MeanFieldFlow>& flows, std::size_t N,
                   std::size_t n, bool marginal) {
  const BoundSpec& spec = cfg.bound;
  if (spec.variant == "none") return 0.0;
  PocBoundInputs inp;
  inp.C_pd = spec.C_pd;
  inp.d = cfg.kernel->dim();
  inp.p = spec.p;
  inp.q = marginal ? cfg.q : 1;
  inp.N = static_cast<double>(N);
  inp.n = n;
  std::vector<double> moments(n + 1);
  for (std::size_t k = 0; k <= n; ++k) moments[k] = flow_moment(flows[k], spec.p);
  inp.moments = moments;
  if (spec.variant == "general" || spec.variant == "oneside") {
    std::vector<double> tau(n);
    for (std::size_t j = 1; j <= n; ++j) {
      tau[j - 1] = spec.variant == "general" ? spec.tau : spec.local_tau(j, flows[j - 1]);
    }
    const OneSidedBound b = poc_bound_oneside(tau, moments, inp);
    return marginal ? b.tensorized : b.single;
  }
  if (spec.variant == "coupling") {
    inp.two_sided = spec.two_sided;
    return poc_bound_coupling(inp).value;
  }
  if (spec.variant == "uniform") {
    const double m_star = *std::max_element(moments.begin(), moments.end());
    return uniform_bound(m_star, spec.tau, inp);
  }
  throw std::invalid_argument("unknown bound variant '" + spec.variant + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::unique_ptr<NonlinearKernel> sharp_mixture_kernel(int dim) { return std::make_unique<SharpMixtureKernel>(dim); }

MeanFieldFlow uniform_cube_flow(int dim) {
  MeanFieldFlow flow;
  flow.law = MixtureLaw::single(UniformBox{dim, 1.0});
  return flow;
}

double flow_moment(const MeanFieldFlow& flow, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("flow_moment: p must be >= 1");
  const LyapunovSpec V = LyapunovSpec::power(p);
  if (const auto* grid = std::get_if<GridMeasure1D>(&flow.law)) return moment(grid->as_measure(), V);
  if (const auto* cloud = std::get_if<SurrogateCloud>(&flow.law)) {
    return moment(DiscreteMeasure::uniform(cloud->particles), V);
  }
  const auto& law = std::get<MixtureLaw>(flow.law);
  double total = 0.0;
  for (std::size_t c = 0; c < law.components.size(); ++c) {
    const auto& comp = law.components[c];
    double m = 0.0;
    if (const auto* atoms = std::get_if<DiscreteMeasure>(&comp)) {
      m = moment(*atoms, V);
    } else if (p != 2.0) {
      throw std::invalid_argument("flow_moment: continuous components support p = 2 only");
    } else if (const auto* box = std::get_if<UniformBox>(&comp)) {
      m = box_second_moment(*box);
    } else {
      m = gaussian_second_moment(std::get<GaussianLaw>(comp));
    }
    total += law.weights[c] * m;
  }
  return total;
}

std::vector<std::size_t> ExperimentConfig::recorded() const {
  if (record_steps.empty()) return {horizon};
  std::vector<std::size_t> out = record_steps;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ExperimentConfig::validate() const {
  if (!kernel) throw std::invalid_argument("experiment: missing kernel");
  if (kernel->dim() != eta0.dim()) throw std::invalid_argument("experiment: kernel and eta0 dimensions differ");
  if (trials < 2) throw std::invalid_argument("experiment: need at least 2 trials");
  if (N_list.empty()) throw std::invalid_argument("experiment: N_list is empty");
  for (std::size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] == 0) throw std::invalid_argument("experiment: N must be >= 1");
    if (i > 0 && N_list[i] <= N_list[i - 1]) throw std::invalid_argument("experiment: N_list must be ascending");
  }
  if (q < 1 || q > N_list.front()) throw std::invalid_argument("experiment: need 1 <= q <= min(N_list)");
  for (const auto n : recorded()) {
    if (n > horizon) throw std::invalid_argument("experiment: recorded step beyond the horizon");
  }
  if (reference.reference_multiplier == 0 || reference.surrogate_multiplier == 0) {
    throw std::invalid_argument("experiment: reference multipliers must be positive");
  }
  if (bound.variant == "oneside" && !bound.local_tau) {
    throw std::invalid_argument("experiment: the one-sided bound needs local contraction constants");
  }
  if (bound.variant == "coupling" && !bound.two_sided) {
    throw std::invalid_argument("experiment: the coupling bound needs (c, C)");
  }
  cost.validate();
}

const ChaosCell& ChaosReport::cell(std::size_t N, std::size_t n) const {
  for (const auto& c : cells) {
    if (c.N == N && c.n == n) return c;
  }
  throw std::out_of_range("ChaosReport: no cell for N=" + std::to_string(N) + ", n=" + std::to_string(n));
}

void ChaosReport::write_csv(std::ostream& out) const {
  out << "N,n,q,mean,stderr,bound,variant\n";
  for (const auto& c : cells) {
    out << c.N << ',' << c.n << ',' << c.q << ',' << format_double(c.mean) << ',' << format_double(c.std_error) << ','
        << format_double(c.bound) << ',' << bound_variant << '\n';
  }
}

std::string ChaosReport::json(const std::string& config_echo) const {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["bound_variant"] = bound_variant;
  j["bound_scale"] = "up to the empirical-measure constant C_pd";
  if (slope) {
    j["slope"] = {{"slope", slope->slope},
                  {"intercept", slope->intercept},
                  {"r_squared", slope->r_squared},
                  {"points", slope->points}};
  } else {
    j["slope"] = nullptr;
  }
  j["notes"] = notes;
  auto& cells_json = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"N", c.N},
                          {"n", c.n},
                          {"q", c.q},
                          {"mean", c.mean},
                          {"stderr", c.std_error},
                          {"trials", c.trials},
                          {"bound", c.bound},
                          {"reference_size", c.reference_size}});
  }
  j["config"] = nlohmann::ordered_json::parse(config_echo);
  return j.dump(2);
}

std::vector<MeanFieldFlow> mean_field_flows(const ExperimentConfig& cfg, std::size_t N) {
  std::vector<MeanFieldFlow> flows;
  flows.reserve(cfg.horizon + 1);
  MeanFieldFlow flow = cfg.eta0;
  if (!cfg.kernel->has_exact_step(flow)) {
    if (!cfg.reference.allow_surrogate) {
      throw std::invalid_argument("experiment: kernel '" + cfg.kernel->name() +
                                  "' has no exact mean-field step and surrogates are disabled");
    }
    flow = make_surrogate(cfg.eta0, cfg.reference.surrogate_multiplier * N, derive_key(cfg.seed, {N}));
  }
  flows.push_back(flow);
  MeanFieldOptions options;
  options.allow_surrogate = cfg.reference.allow_surrogate;
  options.threads = cfg.threads;
  for (std::size_t k = 1; k <= cfg.horizon; ++k) {
    flow = mean_field_step(flow, *cfg.kernel, options);
    flows.push_back(flow);
  }
  return flows;
}

ChaosReport run_rate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto steps = cfg.recorded();
  ChaosReport report;
  report.experiment = cfg.name;
  report.bound_variant = cfg.bound.variant;
  report.seed = cfg.seed;

  const bool exact = cfg.kernel->has_exact_step(cfg.eta0);
  std::vector<MeanFieldFlow> shared_flows;
  if (exact) shared_flows = mean_field_flows(cfg, cfg.N_list.front());

  for (const std::size_t N : cfg.N_list) {
    const std::vector<MeanFieldFlow> flows = exact ? shared_flows : mean_field_flows(cfg, N);
    const std::size_t ref_size = cfg.reference.reference_multiplier * N;
    std::vector<std::vector<double>> values(cfg.trials, std::vector<double>(steps.size()));
    std::vector<ReferenceDistance> first(steps.size());

    parallel_for(cfg.trials, cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        ParticleEnsemble ens = initialize_ensemble(cfg.eta0, N, cfg.seed, t, N);
        std::size_t next = 0;
        for (std::size_t k = 0; k <= cfg.horizon && next < steps.size(); ++k) {
          if (k > 0) ens = ips_step(ens, *cfg.kernel);
          if (steps[next] != k) continue;
          CounterRng rng(cfg.seed, {stream_tag::kReference, N, t, k});
          const ReferenceDistance r =
              estimate_w1_to_reference(ens, flows[k], ref_size, cfg.cost, rng, transport_for(N, ref_size));
          values[t][next] = r.distance;
          if (t == 0) first[next] = r;
          ++next;
        }
      }
    });

    for (std::size_t s = 0; s < steps.size(); ++s) {
      ChaosCell cell;
      cell.N = N;
      cell.n = steps[s];
      cell.q = 1;
      cell.trials = cfg.trials;
      for (std::size_t t = 0; t < cfg.trials; ++t) cell.values.push_back(values[t][s]);
      cell.mean = mean_of(cell.values);
      cell.std_error = std_error_of(cell.values);
      cell.reference_size = first[s].reference_size;
      cell.bound = bound_value(cfg, flows, N, steps[s], false);
      report.cells.push_back(std::move(cell));
    }
    if (!first.empty()) report.notes.push_back("N=" + std::to_string(N) + ": " + first.back().note);
  }

  if (cfg.N_list.size() >= 2) {
    std::vector<std::pair<double, double>> pairs;
    bool positive = true;
    for (const std::size_t N : cfg.N_list) {
      const double m = report.cell(N, steps.back()).mean;
      positive = positive && m > 0.0;
      pairs.emplace_back(static_cast<double>(N), m);
    }
    if (positive) report.slope = fit_log_slope(pairs);
  }
  return report;
}

SlopeFit fit_log_slope(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> xs, ys;
  for (const auto& [N, v] : pairs) {
    if (!(N > 0.0)) throw std::invalid_argument("fit_log_slope: N must be positive");
    if (!(v > 0.0)) throw std::invalid_argument("fit_log_slope: values must be positive");
    xs.push_back(std::log(N));
    ys.push_back(std::log(v));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
    throw std::invalid_argument("fit_log_slope: need at least two distinct N");
  }
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  fit.points = xs.size();
  return fit;
}

ChaosReport marginal_chaos_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.trials < 50) throw std::invalid_argument("marginal_chaos_experiment: need at least 50 trials");
  if (cfg.replicates < 2) throw std::invalid_argument("marginal_chaos_experiment: need at least 2 replicates");
  const auto steps = cfg.recorded();
  const int d = cfg.kernel->dim();
  const std::size_t q = cfg.q;
  const std::size_t T = cfg.trials;
  ChaosReport report;
  report.experiment = cfg.name;
  report.bound_variant = cfg.bound.variant;
  report.seed = cfg.seed;
  report.notes.push_back("each estimate compares " + std::to_string(T) + " trajectory tuples with " +
                         std::to_string(T) + " i.i.d. reference tuples; both clouds add O(T^(-1/(dq))) bias");

  for (const std::size_t N : cfg.N_list) {
    const std::vector<MeanFieldFlow> flows = mean_field_flows(cfg, N);
    // tuples[rep][step] holds one q-tuple per trajectory.
    std::vector<std::vector<PointCloud>> tuples(
        cfg.replicates, std::vector<PointCloud>(steps.size(), PointCloud(d * static_cast<int>(q), T)));
    parallel_for(cfg.replicates * T, cfg.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t id = begin; id < end; ++id) {
        const std::size_t rep = id / T, t = id % T;
        ParticleEnsemble ens = initialize_ensemble(cfg.eta0, N, cfg.seed, id, N);
        std::size_t next = 0;
        for (std::size_t k = 0; k <= cfg.horizon && next < steps.size(); ++k) {
          if (k > 0) ens = ips_step(ens, *cfg.kernel);
          if (steps[next] != k) continue;
          auto row = tuples[rep][next].mutable_row(t);
          for (std::size_t i = 0; i < q; ++i) {
            const auto x = ens.particles[i];
            std::copy(x.begin(), x.end(), row.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(d)));
          }
          ++next;
        }
      }
    });

    for (std::size_t s = 0; s < steps.size(); ++s) {
      ChaosCell cell;
      cell.N = N;
      cell.n = steps[s];
      cell.q = q;
      cell.trials = cfg.replicates;
      cell.reference_size = T;
      cell.values.resize(cfg.replicates);
      parallel_for(cfg.replicates, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t rep = begin; rep < end; ++rep) {
          CounterRng rng(cfg.seed, {stream_tag::kReference, N, q, rep, steps[s]});
          const PointCloud draws = sample_flow(flows[steps[s]], q * T, rng);
          const PointCloud reference(d * static_cast<int>(q), draws.flat());
          cell.values[rep] = w1_exact(DiscreteMeasure::uniform(tuples[rep][s]), DiscreteMeasure::uniform(reference),
                                      cfg.cost, transport_for(T, T))
                                 .distance;
        }
      });
      cell.mean = mean_of(cell.values);
      cell.std_error = std_error_of(cell.values);
      cell.bound = bound_value(cfg, flows, N, steps[s], true);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

TensorizationResult tensorization_check(const PointCloud& points, int q, const CostSpec& cost) {
  const std::size_t N = points.size();
  if (q < 1) throw std::invalid_argument("tensorization_check: q must be >= 1");
  if (static_cast<std::size_t>(q) > N) throw std::invalid_argument("tensorization_check: need q <= N");
  const double all = std::pow(static_cast<double>(N), q);
  const double distinct = falling_factorial(N, q);
  if ((q == 2 && N > 20) || (q == 3 && N > 8) || all + distinct > 4096.0) {
    throw CapacityError("tensorization_check: N = " + std::to_string(N) + " too large for q = " + std::to_string(q));
  }
  TensorizationResult out;
  TransportOptions options;
  options.keep_plan = false;
  out.lhs = q == 1 ? 0.0
                   : w1_exact(tensor_product_measure(points, q), distinct_tuple_measure(points, q), cost, options).distance;
  double mean_norm = 0.0;
  for (std::size_t i = 0; i < N; ++i) mean_norm += norm(points[i]);
  mean_norm /= static_cast<double>(N);
  const double qd = q;
  out.rhs = 2.0 * qd * qd * qd / static_cast<double>(N) * mean_norm;
  out.pass = out.lhs <= out.rhs + 1e-12;
  out.deficit = 1.0 - distinct / all;
  out.deficit_ok = out.deficit <= qd * qd / static_cast<double>(N);
  return out;
}

std::vector<MomentAuditRow> moment_trajectory_audit(const ExperimentConfig& cfg, const DriftConstants& dc) {
  cfg.validate();
  dc.validate();
  const std::size_t N = cfg.N_list.front();
  const std::size_t H = cfg.horizon;
  if (dc.V.kind != LyapunovSpec::Kind::kPower) {
    throw std::invalid_argument("moment_trajectory_audit: only V = ||x||^p is supported");
  }
  const double p = dc.V.parameter;
  const std::vector<double> bound = moment_bound_sequence(dc, flow_moment(cfg.eta0, p), H);
  std::vector<std::vector<double>> values(cfg.trials, std::vector<double>(H + 1));
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      ParticleEnsemble ens = initialize_ensemble(cfg.eta0, N, cfg.seed, t, N);
      for (std::size_t k = 0; k <= H; ++k) {
        if (k > 0) ens = ips_step(ens, *cfg.kernel);
        values[t][k] = dc.V(ens.particles[0]);
      }
    }
  });
  std::vector<MomentAuditRow> rows(H + 1);
  std::vector<double> column(cfg.trials);
  for (std::size_t k = 0; k <= H; ++k) {
    for (std::size_t t = 0; t < cfg.trials; ++t) column[t] = values[t][k];
    auto& r = rows[k];
    r.n = k;
    r.mean = mean_of(column);
    r.std_error = std_error_of(column);
    r.bound = bound[k];
    r.pass = r.mean + 2.0 * r.std_error <= r.bound;
  }
  return rows;
}

std::vector<PointCloud> sharp_snapshots(int dim, std::size_t N, std::size_t count, std::size_t steps,
                                        std::uint64_t seed) {
  const auto kernel = sharp_mixture_kernel(dim);
  const MeanFieldFlow eta0 = uniform_cube_flow(dim);
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    ParticleEnsemble ens = initialize_ensemble(eta0, N, seed, s, N);
    for (std::size_t k = 0; k < steps; ++k) ens = ips_step(ens, *kernel);
    out.push_back(ens.particles);
  }
  return out;
}

}  // namespace nlmc
