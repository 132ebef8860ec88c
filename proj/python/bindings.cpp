#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nlmc/app.hpp"
#include "nlmc/bounds.hpp"
#include "nlmc/contraction.hpp"
#include "nlmc/feynman_kac.hpp"
#include "nlmc/lab.hpp"
#include "nlmc/mckean_vlasov.hpp"
#include "nlmc/transport.hpp"

namespace py = pybind11;
using namespace nlmc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointCloud to_cloud(const Array& points) {
  const auto buf = points.request();
  if (buf.ndim == 1) {
    const auto* p = static_cast<const double*>(buf.ptr);
    return PointCloud(1, std::vector<double>(p, p + buf.shape[0]));
  }
  if (buf.ndim != 2) throw std::invalid_argument("points must be a 1D or 2D array");
  const auto* p = static_cast<const double*>(buf.ptr);
  return PointCloud(static_cast<int>(buf.shape[1]), std::vector<double>(p, p + buf.shape[0] * buf.shape[1]));
}

DiscreteMeasure to_measure(const Array& points, std::optional<std::vector<double>> weights) {
  PointCloud cloud = to_cloud(points);
  if (!weights) return DiscreteMeasure::uniform(std::move(cloud));
  return DiscreteMeasure(std::move(cloud), std::move(*weights));
}

py::dict report_dict(const ChaosReport& r) {
  py::list cells;
  for (const auto& c : r.cells) {
    py::dict d;
    d["N"] = c.N;
    d["n"] = c.n;
    d["q"] = c.q;
    d["mean"] = c.mean;
    d["stderr"] = c.std_error;
    d["bound"] = c.bound;
    d["trials"] = c.trials;
    d["values"] = c.values;
    cells.append(d);
  }
  py::dict out;
  out["experiment"] = r.experiment;
  out["bound_variant"] = r.bound_variant;
  out["cells"] = cells;
  out["slope"] = r.slope ? py::cast(r.slope->slope) : py::none();
  out["notes"] = r.notes;
  return out;
}

app::Overrides overrides(std::optional<std::uint64_t> seed, std::optional<int> threads) {
  app::Overrides o;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_nlmc, m) {
  m.doc() = "Propagation-of-chaos experiments for nonlinear Markov kernels";

  m.def(
      "w1_exact",
      [](const Array& mu, const Array& nu, std::optional<std::vector<double>> mu_weights,
         std::optional<std::vector<double>> nu_weights, double p) {
        return w1_exact(to_measure(mu, mu_weights), to_measure(nu, nu_weights), CostSpec::euclidean(p)).distance;
      },
      py::arg("mu"), py::arg("nu"), py::arg("mu_weights") = py::none(), py::arg("nu_weights") = py::none(),
      py::arg("p") = 1.0, "Exact Wasserstein-p distance between two weighted point clouds.");

  m.def(
      "w1_sorted_1d",
      [](const Array& mu, const Array& nu, std::optional<std::vector<double>> mu_weights,
         std::optional<std::vector<double>> nu_weights) {
        return w1_sorted_1d(to_measure(mu, mu_weights), to_measure(nu, nu_weights));
      },
      py::arg("mu"), py::arg("nu"), py::arg("mu_weights") = py::none(), py::arg("nu_weights") = py::none());

  m.def(
      "boltzmann_gibbs",
      [](const Array& points, std::optional<std::vector<double>> weights, std::vector<double> y_obs, double eps0) {
        return boltzmann_gibbs(to_measure(points, weights), Potential::bounded_gaussian(y_obs, eps0)).weights();
      },
      py::arg("points"), py::arg("weights"), py::arg("y_obs"), py::arg("eps0"),
      "Reweights by G(x) = eps0 + exp(-|x - y|^2 / 2).");

  m.def(
      "mv_tau1_bound",
      [](int dim, double delta, double lambda_V, double kappa_W) {
        const auto b = mv_tau1_bound(MvParams::quadratic(dim, delta, lambda_V, kappa_W));
        return py::dict(py::arg("value") = b.value, py::arg("c") = b.c, py::arg("C") = b.C);
      },
      py::arg("dim"), py::arg("delta"), py::arg("lambda_V"), py::arg("kappa_W"));

  m.def(
      "mv_moment_constants",
      [](int dim, double delta, double lambda_V, double kappa_W) {
        const auto dc = mv_moment_constants(MvParams::quadratic(dim, delta, lambda_V, kappa_W));
        return py::make_tuple(dc.a(1), dc.b(1), dc.c);
      },
      py::arg("dim"), py::arg("delta"), py::arg("lambda_V"), py::arg("kappa_W"));

  m.def(
      "mv_contraction_estimate",
      [](int dim, double delta, double lambda_V, double kappa_W, std::size_t pairs, std::uint64_t seed) {
        ContractionOptions options;
        options.budget = pairs;
        options.seed = seed;
        return dirac_contraction_estimate(*mv_kernel(MvParams::quadratic(dim, delta, lambda_V, kappa_W)), 1, options)
            .estimate;
      },
      py::arg("dim"), py::arg("delta"), py::arg("lambda_V"), py::arg("kappa_W"), py::arg("pairs") = 500,
      py::arg("seed") = 0);

  m.def(
      "fk_moment_constants",
      [](double a_tilde, double lambda, double G_bar, double eps, double c) {
        const auto dc = fk_moment_constants(a_tilde, lambda, G_bar, eps, c);
        return py::make_tuple(dc.a(1), dc.b(1), dc.c);
      },
      py::arg("a_tilde"), py::arg("lambda_"), py::arg("G_bar"), py::arg("eps"), py::arg("c") = 0.0);

  m.def(
      "moment_bound_sequence",
      [](double a, double b, double c, double eta0_V, std::size_t n) {
        return moment_bound_sequence(DriftConstants::homogeneous(a, b, c), eta0_V, n);
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("eta0_V"), py::arg("n"));

  m.def(
      "poc_bound_general",
      [](std::vector<double> moments, std::vector<double> tau, int d, double p, std::size_t q, double N, std::size_t n,
         double C_pd) {
        PocBoundInputs inp;
        inp.moments = std::move(moments);
        inp.tau = std::move(tau);
        inp.d = d;
        inp.p = p;
        inp.q = q;
        inp.N = N;
        inp.n = n;
        inp.C_pd = C_pd;
        return poc_bound_general(inp);
      },
      py::arg("moments"), py::arg("tau"), py::arg("d"), py::arg("p") = 2.0, py::arg("q") = 1, py::arg("N"),
      py::arg("n"), py::arg("C_pd") = 1.0);

  m.def(
      "rate_function", [](double p, int d, double N) { return rate_function(p, d, N).value; }, py::arg("p"),
      py::arg("d"), py::arg("N"));

  m.def(
      "kappa", [](double alpha, double tau, int d) { return kappa(alpha, tau, d).kappa; }, py::arg("alpha"),
      py::arg("tau"), py::arg("d"));

  m.def(
      "tensorization_check",
      [](const Array& points, int q) {
        const auto r = tensorization_check(to_cloud(points), q);
        return py::dict(py::arg("lhs") = r.lhs, py::arg("rhs") = r.rhs, py::arg("pass") = r.pass,
                        py::arg("deficit") = r.deficit, py::arg("deficit_ok") = r.deficit_ok);
      },
      py::arg("points"), py::arg("q"));

  m.def(
      "run_experiment",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> threads, bool marginal) {
        const auto loaded = app::load_experiment(config, overrides(seed, threads));
        py::gil_scoped_release release;
        auto report = marginal ? marginal_chaos_experiment(loaded.cfg) : run_rate_experiment(loaded.cfg);
        py::gil_scoped_acquire acquire;
        return report_dict(report);
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = py::none(), py::arg("marginal") = false,
      "Runs the rate (or q-marginal) experiment described by a TOML config.");

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config, const std::string& out_dir,
         std::optional<std::uint64_t> seed, std::optional<int> threads) {
        std::ostringstream out, err;
        const int code = app::run_command(command, config, overrides(seed, threads), out_dir, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("out_dir") = ".", py::arg("seed") = py::none(),
      py::arg("threads") = py::none(), "Same as the nlmc CLI: returns (exit_code, stdout, stderr).");
}
