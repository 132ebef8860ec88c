#include "nlmc/app.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "toml.hpp"

#include "nlmc/bounds.hpp"
#include "nlmc/contraction.hpp"
#include "nlmc/errors.hpp"

namespace nlmc::app {

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string where(std::string_view table, std::string_view key) {
  return table.empty() ? std::string(key) : std::string(table) + "." + std::string(key);
}

void allow_keys(const toml::table& t, std::string_view name, std::initializer_list<std::string_view> keys) {
  const std::set<std::string_view> allowed(keys);
  for (const auto& [k, v] : t) {
    if (!allowed.count(k.str())) throw ConfigError("unknown key '" + where(name, k.str()) + "'");
  }
}

const toml::table* table_or_null(const toml::table& t, std::string_view key) {
  const toml::node* node = t.get(key);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError("'" + std::string(key) + "' must be a table");
  return node->as_table();
}

const toml::table& require_table(const toml::table& t, std::string_view key) {
  const toml::table* sub = table_or_null(t, key);
  if (!sub) throw ConfigError("missing table [" + std::string(key) + "]");
  return *sub;
}

// Reads a number (integer or float).
std::optional<double> opt_num(const toml::table& t, std::string_view name, std::string_view key) {
  const toml::node* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<double>()) return *v;
  throw ConfigError("'" + where(name, key) + "' must be a number");
}

double num(const toml::table& t, std::string_view name, std::string_view key, std::optional<double> fallback = {}) {
  if (auto v = opt_num(t, name, key)) return *v;
  if (fallback) return *fallback;
  throw ConfigError("missing key '" + where(name, key) + "'");
}

std::optional<std::int64_t> opt_int(const toml::table& t, std::string_view name, std::string_view key) {
  const toml::node* node = t.get(key);
  if (!node) return std::nullopt;
  if (!node->is_integer()) throw ConfigError("'" + where(name, key) + "' must be an integer");
  return node->as_integer()->get();
}

std::size_t count(const toml::table& t, std::string_view name, std::string_view key,
                  std::optional<std::size_t> fallback = {}) {
  if (auto v = opt_int(t, name, key)) {
    if (*v < 0) throw ConfigError("'" + where(name, key) + "' must be nonnegative");
    return static_cast<std::size_t>(*v);
  }
  if (fallback) return *fallback;
  throw ConfigError("missing key '" + where(name, key) + "'");
}

std::string str(const toml::table& t, std::string_view name, std::string_view key,
                std::optional<std::string> fallback = {}) {
  const toml::node* node = t.get(key);
  if (!node) {
    if (fallback) return *fallback;
    throw ConfigError("missing key '" + where(name, key) + "'");
  }
  if (auto v = node->value<std::string>()) return *v;
  throw ConfigError("'" + where(name, key) + "' must be a string");
}

bool flag(const toml::table& t, std::string_view name, std::string_view key, bool fallback) {
  const toml::node* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value<bool>()) return *v;
  throw ConfigError("'" + where(name, key) + "' must be a boolean");
}

const toml::array* opt_array(const toml::table& t, std::string_view name, std::string_view key) {
  const toml::node* node = t.get(key);
  if (!node) return nullptr;
  if (!node->is_array()) throw ConfigError("'" + where(name, key) + "' must be an array");
  return node->as_array();
}

std::vector<double> num_array(const toml::array& a, const std::string& what) {
  std::vector<double> out;
  for (const auto& e : a) {
    auto v = e.value<double>();
    if (!v) throw ConfigError("'" + what + "' must contain numbers");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> num_array(const toml::table& t, std::string_view name, std::string_view key) {
  const toml::array* a = opt_array(t, name, key);
  if (!a) throw ConfigError("missing key '" + where(name, key) + "'");
  return num_array(*a, where(name, key));
}

std::vector<std::size_t> count_array(const toml::table& t, std::string_view name, std::string_view key) {
  std::vector<std::size_t> out;
  const toml::array* a = opt_array(t, name, key);
  if (!a) return out;
  for (const auto& e : *a) {
    if (!e.is_integer() || e.as_integer()->get() < 0) {
      throw ConfigError("'" + where(name, key) + "' must contain nonnegative integers");
    }
    out.push_back(static_cast<std::size_t>(e.as_integer()->get()));
  }
  return out;
}

toml::table parse_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  try {
    return toml::parse_file(path);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path << ": " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
}

std::string to_json(const toml::table& t) {
  std::ostringstream out;
  out << toml::json_formatter{t};
  return out.str();
}

std::uint64_t seed_of(const toml::table& root, const Overrides& o) {
  if (o.seed) return *o.seed;
  const auto v = opt_int(root, "", "seed");
  if (!v) return 0;
  if (*v < 0) throw ConfigError("'seed' must be nonnegative");
  return static_cast<std::uint64_t>(*v);
}

int threads_of(const toml::table& root, const Overrides& o) {
  const int t = o.threads ? *o.threads : static_cast<int>(opt_int(root, "", "threads").value_or(1));
  if (t < 1) throw ConfigError("threads must be >= 1");
  return t;
}

struct KernelBuild {
  std::shared_ptr<const NonlinearKernel> kernel;
  std::string type;
  std::optional<MvParams> mv;
  std::optional<FkModel> fk;
};

KernelBuild build_kernel(const toml::table& root) {
  const toml::table& k = require_table(root, "kernel");
  allow_keys(k, "kernel", {"type", "dim", "potential", "delta", "lambda_V", "kappa_W", "radius", "observations",
                           "eps0", "rho", "sigma"});
  KernelBuild out;
  out.type = str(k, "kernel", "type");
  const auto dim = static_cast<int>(count(k, "kernel", "dim", 1));
  if (dim < 1) throw ConfigError("'kernel.dim' must be >= 1");
  if (out.type == "sharp-mixture") {
    out.kernel = sharp_mixture_kernel(dim);
  } else if (out.type == "mckean-vlasov-em") {
    const std::string potential = str(k, "kernel", "potential", "quadratic");
    const double delta = num(k, "kernel", "delta");
    const double kappa_w = num(k, "kernel", "kappa_W", 0.0);
    if (potential == "quadratic") {
      out.mv = MvParams::quadratic(dim, delta, num(k, "kernel", "lambda_V"), kappa_w);
    } else if (potential == "double-well") {
      out.mv = MvParams::double_well(dim, delta, num(k, "kernel", "radius", 2.0), kappa_w);
    } else {
      throw ConfigError("'kernel.potential' must be \"quadratic\" or \"double-well\"");
    }
    out.mv->validate();
    out.kernel = mv_kernel(*out.mv);
  } else if (out.type == "feynman-kac-sisr") {
    if (dim != 1) throw ConfigError("feynman-kac-sisr is configured in d = 1");
    GaussianMutation m{num(k, "kernel", "rho"), num(k, "kernel", "sigma")};
    out.fk = FkModel::from_observations(num_array(k, "kernel", "observations"), num(k, "kernel", "eps0"), m);
    out.fk->validate();
    out.kernel = sisr_kernel(*out.fk);
  } else {
    throw ConfigError("unknown kernel type '" + out.type +
                      "' (expected sharp-mixture, mckean-vlasov-em or feynman-kac-sisr)");
  }
  return out;
}

MeanFieldFlow build_initial(const toml::table& root, int dim) {
  const toml::table& t = require_table(root, "initial");
  allow_keys(t, "initial", {"law", "half_width", "point", "mean", "sd", "grid_points", "grid_half_width"});
  const std::string law = str(t, "initial", "law");
  MeanFieldFlow flow;
  if (law == "uniform-cube") {
    flow.law = MixtureLaw::single(UniformBox{dim, num(t, "initial", "half_width", 1.0)});
  } else if (law == "dirac") {
    const auto x = num_array(t, "initial", "point");
    if (static_cast<int>(x.size()) != dim) throw ConfigError("'initial.point' must have kernel.dim entries");
    flow.law = MixtureLaw::single(DiscreteMeasure::dirac(Point(x)));
  } else if (law == "gaussian") {
    auto mean = num_array(t, "initial", "mean");
    if (static_cast<int>(mean.size()) != dim) throw ConfigError("'initial.mean' must have kernel.dim entries");
    flow.law = MixtureLaw::single(GaussianLaw{std::move(mean), num(t, "initial", "sd")});
  } else if (law == "grid-gaussian") {
    if (dim != 1) throw ConfigError("grid-gaussian initial laws are one-dimensional");
    const auto mean = num_array(t, "initial", "mean");
    if (mean.size() != 1) throw ConfigError("'initial.mean' must have one entry");
    flow.law = GridMeasure1D::discretized_gaussian(count(t, "initial", "grid_points", 2001),
                                                   num(t, "initial", "grid_half_width", 10.0), mean[0],
                                                   num(t, "initial", "sd"));
  } else {
    throw ConfigError("unknown initial law '" + law + "' (expected uniform-cube, dirac, gaussian or grid-gaussian)");
  }
  return flow;
}

BoundSpec build_bound(const toml::table& root, const KernelBuild& kb) {
  BoundSpec spec;
  const toml::table* t = table_or_null(root, "bound");
  if (!t) return spec;
  allow_keys(*t, "bound", {"variant", "tau", "c", "C", "p", "C_pd"});
  spec.variant = str(*t, "bound", "variant", "none");
  spec.p = num(*t, "bound", "p", 2.0);
  spec.C_pd = num(*t, "bound", "C_pd", 1.0);

  std::optional<std::pair<double, double>> kernel_cC;
  if (kb.type == "sharp-mixture") kernel_cC = sharp_two_sided_constants();
  if (kb.mv) {
    const MvTauBound tb = mv_tau1_bound(*kb.mv);
    kernel_cC = std::make_pair(tb.c, tb.C);
  }
  const auto tau = opt_num(*t, "bound", "tau");
  const auto c = opt_num(*t, "bound", "c");
  const auto C = opt_num(*t, "bound", "C");
  if (c.has_value() != C.has_value()) throw ConfigError("'bound.c' and 'bound.C' must be given together");
  if (c) {
    spec.two_sided = std::make_pair(*c, *C);
  } else {
    spec.two_sided = kernel_cC;
  }

  if (spec.variant == "none") return spec;
  if (spec.variant == "coupling") {
    if (!spec.two_sided) throw ConfigError("'bound.variant = coupling' needs bound.c and bound.C for this kernel");
  } else if (spec.variant == "general" || spec.variant == "uniform") {
    if (tau) {
      spec.tau = *tau;
    } else if (spec.two_sided) {
      spec.tau = spec.two_sided->first + spec.two_sided->second;
    } else {
      throw ConfigError("'bound.variant = " + spec.variant + "' needs bound.tau for this kernel");
    }
    if (spec.variant == "uniform" && !(spec.tau < 1.0)) {
      throw ConfigError("'bound.variant = uniform' needs tau < 1 (got " + fmt(spec.tau) + ")");
    }
  } else if (spec.variant == "oneside") {
    if (kb.fk) {
      const FkModel model = *kb.fk;
      spec.local_tau = [model](std::size_t j, const MeanFieldFlow& prev) {
        return phi_tau1_bound(model.potential(j - 1), flow_moment(prev, 1.0), model.mutation(j).tau1());
      };
    } else {
      double fixed = 0.0;
      if (tau) {
        fixed = *tau;
      } else if (spec.two_sided) {
        fixed = spec.two_sided->first + spec.two_sided->second;
      } else {
        throw ConfigError("'bound.variant = oneside' needs bound.tau for this kernel");
      }
      spec.local_tau = [fixed](std::size_t, const MeanFieldFlow&) { return fixed; };
    }
  } else {
    throw ConfigError("unknown bound variant '" + spec.variant +
                      "' (expected none, general, coupling, uniform or oneside)");
  }
  return spec;
}

LoadedExperiment load_from_table(const toml::table& root, const Overrides& overrides) {
  LoadedExperiment out;
  const KernelBuild kb = build_kernel(root);
  out.kernel_type = kb.type;
  out.mv = kb.mv;
  out.fk = kb.fk;
  ExperimentConfig& cfg = out.cfg;
  cfg.name = str(root, "", "name", "experiment");
  cfg.kernel = kb.kernel;
  cfg.eta0 = build_initial(root, kb.kernel->dim());
  cfg.seed = seed_of(root, overrides);
  cfg.threads = threads_of(root, overrides);

  const toml::table& run = require_table(root, "run");
  allow_keys(run, "run", {"N", "horizon", "record_steps", "trials", "q", "replicates", "reference_multiplier",
                          "surrogate_multiplier", "allow_surrogate"});
  cfg.N_list = count_array(run, "run", "N");
  cfg.horizon = count(run, "run", "horizon");
  cfg.record_steps = count_array(run, "run", "record_steps");
  cfg.trials = count(run, "run", "trials");
  cfg.q = count(run, "run", "q", 1);
  cfg.replicates = count(run, "run", "replicates", 5);
  cfg.reference.reference_multiplier = count(run, "run", "reference_multiplier", 8);
  cfg.reference.surrogate_multiplier = count(run, "run", "surrogate_multiplier", 64);
  cfg.reference.allow_surrogate = flag(run, "run", "allow_surrogate", true);
  if (kb.fk) {
    if (const auto h = kb.fk->horizon(); h && cfg.horizon > *h) {
      throw ConfigError("'run.horizon' exceeds the " + std::to_string(*h) + " configured observation steps");
    }
  }

  if (const toml::table* c = table_or_null(root, "cost")) {
    allow_keys(*c, "cost", {"p"});
    cfg.cost = CostSpec::euclidean(num(*c, "cost", "p", 1.0));
  }
  cfg.bound = build_bound(root, kb);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.echo_json = to_json(root);
  return out;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& file) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / file, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
  return f;
}

void write_json(const std::filesystem::path& dir, const std::string& file, const ordered_json& j) {
  auto f = open_output(dir, file);
  f << j.dump(2) << '\n';
}

ordered_json sidecar(const std::string& command, std::uint64_t seed, int threads, const std::string& echo) {
  ordered_json j;
  j["schema_version"] = kCsvSchemaVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["environment"] = {{"threads", threads}};
  j["config"] = ordered_json::parse(echo);
  return j;
}

std::string report_json(const ChaosReport& report, const LoadedExperiment& le) {
  auto j = ordered_json::parse(report.json(le.echo_json));
  j["environment"] = {{"threads", le.cfg.threads},
                      {"reference_multiplier", le.cfg.reference.reference_multiplier},
                      {"surrogate_multiplier", le.cfg.reference.surrogate_multiplier}};
  return j.dump(2);
}

void print_report(const ChaosReport& report, std::ostream& out) {
  for (const auto& c : report.cells) {
    out << "N=" << c.N << " n=" << c.n << " q=" << c.q << "  mean=" << fmt(c.mean) << "  stderr=" << fmt(c.std_error);
    if (report.bound_variant != "none") out << "  bound(" << report.bound_variant << ")=" << fmt(c.bound);
    out << '\n';
  }
  if (report.slope) {
    out << "slope=" << fmt(report.slope->slope) << " intercept=" << fmt(report.slope->intercept)
        << " r2=" << fmt(report.slope->r_squared) << '\n';
  }
  for (const auto& note : report.notes) out << "note: " << note << '\n';
}

int cmd_report(const std::string& command, const toml::table& root, const Overrides& o,
               const std::filesystem::path& dir, std::ostream& out) {
  const LoadedExperiment le = load_from_table(root, o);
  if (command == "filter" && !le.fk) throw ConfigError("filter needs kernel.type = \"feynman-kac-sisr\"");
  const ChaosReport report =
      command == "marginal" ? marginal_chaos_experiment(le.cfg) : run_rate_experiment(le.cfg);
  {
    auto f = open_output(dir, command + ".csv");
    report.write_csv(f);
  }
  {
    auto f = open_output(dir, command + ".json");
    f << report_json(report, le) << '\n';
  }
  out << command << ": " << le.cfg.name << " (" << le.kernel_type << ", seed " << le.cfg.seed << ")\n";
  print_report(report, out);
  return kExitOk;
}

int cmd_moments(const toml::table& root, const Overrides& o, const std::filesystem::path& dir, std::ostream& out) {
  const LoadedExperiment le = load_from_table(root, o);
  DriftConstants dc;
  if (le.mv) {
    dc = mv_moment_constants(*le.mv);
  } else if (le.fk) {
    const Potential& G = le.fk->potential(0);
    const GaussianMutation& M = le.fk->mutation(1);
    dc = fk_moment_constants(M.a_tilde(), G.lambda, G.G_bar, G.eps, M.drift_constant(le.fk->dim));
  } else {
    throw ConfigError("moments needs a mckean-vlasov-em or feynman-kac-sisr kernel");
  }
  const auto rows = moment_trajectory_audit(le.cfg, dc);
  bool all = true;
  {
    auto f = open_output(dir, "moments.csv");
    f << "n,mean,stderr,bound,pass\n";
    for (const auto& r : rows) {
      f << r.n << ',' << fmt(r.mean) << ',' << fmt(r.std_error) << ',' << fmt(r.bound) << ',' << (r.pass ? 1 : 0)
        << '\n';
      all = all && r.pass;
    }
  }
  auto j = sidecar("moments", le.cfg.seed, le.cfg.threads, le.echo_json);
  j["drift"] = {{"a", dc.a(1)}, {"b", dc.b(1)}, {"c", dc.c}};
  j["pass"] = all;
  write_json(dir, "moments.json", j);
  out << "moments: a=" << fmt(dc.a(1)) << " b=" << fmt(dc.b(1)) << " c=" << fmt(dc.c) << " N=" << le.cfg.N_list.front()
      << " trials=" << le.cfg.trials << '\n';
  out << "mean V(X^1_n) + 2 stderr <= bound for every n <= " << le.cfg.horizon << ": " << (all ? "PASS" : "FAIL")
      << '\n';
  return kExitOk;
}

int cmd_contraction(const toml::table& root, const Overrides& o, const std::filesystem::path& dir,
                    std::ostream& out) {
  allow_keys(root, "", {"name", "seed", "threads", "kernel", "contraction"});
  const KernelBuild kb = build_kernel(root);
  if (!kb.mv) throw ConfigError("contraction needs kernel.type = \"mckean-vlasov-em\"");
  const toml::table* t = table_or_null(root, "contraction");
  const toml::table empty;
  const toml::table& c = t ? *t : empty;
  allow_keys(c, "contraction", {"pairs", "box_half_width", "mode", "antithetic"});
  ContractionOptions options;
  options.budget = count(c, "contraction", "pairs", 500);
  options.box_half_width = num(c, "contraction", "box_half_width", 2.0);
  options.antithetic = flag(c, "contraction", "antithetic", true);
  options.seed = seed_of(root, o);
  const std::string mode = str(c, "contraction", "mode", "nonlinear");
  ContractionEstimate est;
  if (mode == "nonlinear") {
    est = dirac_contraction_estimate(*kb.kernel, 1, options);
  } else if (mode == "frozen") {
    const auto frozen = kb.kernel->freeze(DiscreteMeasure::dirac(Point(std::vector<double>(kb.mv->dim, 0.0))), 1);
    est = dirac_contraction_estimate(*frozen, options);
  } else {
    throw ConfigError("'contraction.mode' must be \"nonlinear\" or \"frozen\"");
  }
  const MvTauBound tb = mv_tau1_bound(*kb.mv);
  const bool pass = est.estimate <= tb.value + 1e-12;
  {
    auto f = open_output(dir, "contraction.csv");
    f << "mode,estimate,bound,c,C,pairs,skipped,exact,pass\n";
    f << mode << ',' << fmt(est.estimate) << ',' << fmt(tb.value) << ',' << fmt(tb.c) << ',' << fmt(tb.C) << ','
      << est.pairs << ',' << est.skipped << ',' << (est.exact ? 1 : 0) << ',' << (pass ? 1 : 0) << '\n';
  }
  auto j = sidecar("contraction", options.seed, 1, to_json(root));
  j["estimate"] = est.estimate;
  j["bound"] = tb.value;
  j["pass"] = pass;
  j["audit_warnings"] = audit_mv_params(*kb.mv, 400, options.seed);
  write_json(dir, "contraction.json", j);
  out << "contraction (" << mode << "): estimate=" << fmt(est.estimate) << " bound=" << fmt(tb.value)
      << " pairs=" << est.pairs << " -> " << (pass ? "PASS" : "FAIL") << '\n';
  return kExitOk;
}

int cmd_tensor(const toml::table& root, const Overrides& o, const std::filesystem::path& dir, std::ostream& out) {
  allow_keys(root, "", {"name", "seed", "threads", "tensor"});
  const toml::table& t = require_table(root, "tensor");
  allow_keys(t, "tensor", {"q", "points", "N", "samples", "dim", "steps"});
  const int q = static_cast<int>(count(t, "tensor", "q", 2));
  const std::uint64_t seed = seed_of(root, o);

  struct Case {
    std::size_t sample;
    PointCloud points;
  };
  std::vector<Case> cases;
  if (const toml::array* pts = opt_array(t, "tensor", "points")) {
    std::vector<Point> points;
    for (const auto& row : *pts) {
      if (!row.is_array()) throw ConfigError("'tensor.points' must be an array of arrays");
      points.emplace_back(num_array(*row.as_array(), "tensor.points"));
    }
    if (points.empty()) throw ConfigError("'tensor.points' is empty");
    for (const auto& p : points) {
      if (p.dim() != points.front().dim()) throw ConfigError("'tensor.points' rows must have equal length");
    }
    cases.push_back({0, PointCloud::from_points(points)});
  } else {
    const auto Ns = count_array(t, "tensor", "N");
    if (Ns.empty()) throw ConfigError("[tensor] needs either points or N");
    const std::size_t samples = count(t, "tensor", "samples", 50);
    const int dim = static_cast<int>(count(t, "tensor", "dim", 1));
    const std::size_t steps = count(t, "tensor", "steps", 3);
    for (const std::size_t N : Ns) {
      const auto snaps = sharp_snapshots(dim, N, samples, steps, derive_key(seed, {N}));
      for (std::size_t s = 0; s < snaps.size(); ++s) cases.push_back({s, snaps[s]});
    }
  }

  std::size_t passed = 0, deficit_ok = 0;
  {
    auto f = open_output(dir, "tensor.csv");
    f << "sample,N,q,lhs,rhs,pass,deficit,deficit_ok\n";
    for (const auto& c : cases) {
      const TensorizationResult r = tensorization_check(c.points, q);
      passed += r.pass;
      deficit_ok += r.deficit_ok;
      f << c.sample << ',' << c.points.size() << ',' << q << ',' << fmt(r.lhs) << ',' << fmt(r.rhs) << ','
        << (r.pass ? 1 : 0) << ',' << fmt(r.deficit) << ',' << (r.deficit_ok ? 1 : 0) << '\n';
      if (cases.size() == 1) {
        out << "lhs=" << fmt(r.lhs) << " rhs=" << fmt(r.rhs) << ' ' << (r.pass ? "PASS" : "FAIL") << '\n';
      }
    }
  }
  const bool all = passed == cases.size() && deficit_ok == cases.size();
  auto j = sidecar("tensor", seed, 1, to_json(root));
  j["cases"] = cases.size();
  j["pass"] = all;
  write_json(dir, "tensor.json", j);
  out << "tensor: " << passed << "/" << cases.size() << " lhs <= rhs, " << deficit_ok << "/" << cases.size()
      << " deficit <= q^2/N -> " << (all ? "PASS" : "FAIL") << '\n';
  return kExitOk;
}

int cmd_bounds(const toml::table& root, const Overrides& o, const std::filesystem::path& dir, std::ostream& out) {
  allow_keys(root, "", {"name", "seed", "threads", "bounds", "kappa"});
  const toml::table* b = table_or_null(root, "bounds");
  const toml::table* k = table_or_null(root, "kappa");
  if (!b && !k) throw ConfigError("bounds needs a [bounds] or [kappa] table");
  auto j = sidecar("bounds", seed_of(root, o), 1, to_json(root));
  auto f = open_output(dir, "bounds.csv");
  f << "n,N,bound,variant\n";
  if (b) {
    allow_keys(*b, "bounds", {"variant", "d", "p", "q", "C_pd", "N", "n_max", "tau", "moment", "c", "C"});
    const std::string variant = str(*b, "bounds", "variant", "general");
    PocBoundInputs inp;
    inp.d = static_cast<int>(count(*b, "bounds", "d", 3));
    inp.p = num(*b, "bounds", "p", 2.0);
    inp.q = count(*b, "bounds", "q", 1);
    inp.C_pd = num(*b, "bounds", "C_pd", 1.0);
    inp.moments = {num(*b, "bounds", "moment")};
    const auto Ns = count_array(*b, "bounds", "N");
    if (Ns.empty()) throw ConfigError("'bounds.N' must list at least one N");
    const std::size_t n_max = count(*b, "bounds", "n_max", 50);
    if (variant == "general" || variant == "uniform") {
      inp.tau = {num(*b, "bounds", "tau")};
    } else if (variant == "coupling") {
      inp.two_sided = std::make_pair(num(*b, "bounds", "c"), num(*b, "bounds", "C"));
    } else {
      throw ConfigError("'bounds.variant' must be general, uniform or coupling");
    }
    for (const std::size_t N : Ns) {
      inp.N = static_cast<double>(N);
      for (std::size_t n = 0; n <= n_max; ++n) {
        inp.n = n;
        double v = 0.0;
        if (variant == "general") {
          v = poc_bound_general(inp);
        } else if (variant == "uniform") {
          v = uniform_bound(inp.moments.front(), inp.tau.front(), inp);
        } else {
          v = poc_bound_coupling(inp).value;
        }
        f << n << ',' << N << ',' << fmt(v) << ',' << variant << '\n';
      }
      inp.n = n_max;
      out << variant << " bound at N=" << N << ", n=" << n_max << ": "
          << fmt(variant == "general"   ? poc_bound_general(inp)
                 : variant == "uniform" ? uniform_bound(inp.moments.front(), inp.tau.front(), inp)
                                        : poc_bound_coupling(inp).value)
          << '\n';
    }
    const RateValue r = rate_function(inp.p, inp.d, static_cast<double>(Ns.back()));
    out << "rate R(" << Ns.back() << ")=" << fmt(r.value) << " [" << r.branch << "]" << (r.excluded ? " excluded" : "")
        << '\n';
  }
  if (k) {
    allow_keys(*k, "kappa", {"alpha", "tau", "d", "N"});
    const KappaResult kr =
        kappa(num(*k, "kappa", "alpha"), num(*k, "kappa", "tau"), static_cast<int>(count(*k, "kappa", "d")));
    j["kappa"] = kr.kappa;
    out << "kappa=" << fmt(kr.kappa) << '\n';
    if (const auto N = opt_num(*k, "kappa", "N")) {
      j["n0"] = kr.n0(*N);
      out << "n0(" << fmt(*N) << ")=" << fmt(kr.n0(*N)) << '\n';
    }
  }
  write_json(dir, "bounds.json", j);
  return kExitOk;
}

}  // namespace

LoadedExperiment load_experiment(const std::string& path, const Overrides& overrides) {
  const toml::table root = parse_file(path);
  allow_keys(root, "", {"name", "seed", "threads", "kernel", "initial", "run", "cost", "bound"});
  try {
    return load_from_table(root, overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> command_names() {
  return {"rate", "marginal", "moments", "contraction", "filter", "tensor", "bounds"};
}

int run_command(const std::string& command, const std::string& config_path, const Overrides& overrides,
                const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const toml::table root = parse_file(config_path);
    const std::filesystem::path dir(out_dir);
    try {
      if (command == "rate" || command == "marginal" || command == "filter") {
        allow_keys(root, "", {"name", "seed", "threads", "kernel", "initial", "run", "cost", "bound"});
        return cmd_report(command, root, overrides, dir, out);
      }
      if (command == "moments") {
        allow_keys(root, "", {"name", "seed", "threads", "kernel", "initial", "run", "cost", "bound"});
        return cmd_moments(root, overrides, dir, out);
      }
      if (command == "contraction") return cmd_contraction(root, overrides, dir, out);
      if (command == "tensor") return cmd_tensor(root, overrides, dir, out);
      if (command == "bounds") return cmd_bounds(root, overrides, dir, out);
    } catch (const ConfigError& e) {
      throw ConfigError(config_path + ": " + e.what());
    }
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numeric failure in '" << command << "': " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace nlmc::app
