#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nlmc/bounds.hpp"
#include "nlmc/kernel.hpp"
#include "nlmc/measure.hpp"
#include "nlmc/transport.hpp"

namespace nlmc {

/// K_eta(x, .) = (1/3) delta_x + (1/3) eta + (1/3) U_d with U_d uniform on [-1, 1]^d.
/// Advances mixture flows exactly: eta -> (2/3) eta + (1/3) U_d.
std::unique_ptr<NonlinearKernel> sharp_mixture_kernel(int dim);

/// Two-sided regularity constants (c, C) = (1/3, 1/3) of the sharp kernel.
inline std::pair<double, double> sharp_two_sided_constants() { return {1.0 / 3.0, 1.0 / 3.0}; }

/// U_d as a mean-field flow.
MeanFieldFlow uniform_cube_flow(int dim);

/// int ||x||^p d eta. Exact for atoms, grids and surrogate clouds; for uniform boxes and
/// Gaussian components only p = 2 is supported.
double flow_moment(const MeanFieldFlow& flow, double p);

struct ReferenceSpec {
  /// Closed-form and grid flows are used as is; other kernels fall back to a surrogate
  /// cloud of surrogate_multiplier * N particles when allowed.
  bool allow_surrogate = true;
  std::size_t surrogate_multiplier = 64;
  /// Reference cloud size R = reference_multiplier * N for continuous laws.
  std::size_t reference_multiplier = 8;
};

struct BoundSpec {
  /// "none", "general", "coupling", "uniform" or "oneside".
  std::string variant = "none";
  /// Uniform per-step contraction bound tau* ("general", "uniform").
  double tau = 0.0;
  /// (c, C) for "coupling".
  std::optional<std::pair<double, double>> two_sided;
  /// tau_1(Phi_j)[eta_{j-1}] for "oneside"; receives j and eta_{j-1}.
  std::function<double(std::size_t, const MeanFieldFlow&)> local_tau;
  double p = 2.0;
  double C_pd = 1.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::shared_ptr<const NonlinearKernel> kernel;
  MeanFieldFlow eta0;
  std::vector<std::size_t> N_list;
  std::size_t horizon = 0;
  /// Steps at which distances are recorded (default: the horizon only).
  std::vector<std::size_t> record_steps;
  std::size_t q = 1;
  std::size_t trials = 2;
  /// Independent batches for the q-marginal estimator (each with `trials` trajectories).
  std::size_t replicates = 5;
  std::uint64_t seed = 0;
  ReferenceSpec reference;
  CostSpec cost = CostSpec::euclidean(1.0);
  BoundSpec bound;
  int threads = 1;

  std::vector<std::size_t> recorded() const;
  /// trials >= 2, N_list nonempty and ascending, 1 <= q <= min N, kernel present and
  /// dimension-compatible with eta0.
  void validate() const;
};

struct ChaosCell {
  std::size_t N = 0;
  std::size_t n = 0;
  std::size_t q = 1;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  double bound = 0.0;
  /// Reference atoms used per estimate (0 when compared with the law exactly).
  std::size_t reference_size = 0;
  std::vector<double> values;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct ChaosReport {
  std::string experiment;
  std::string bound_variant = "none";
  std::vector<ChaosCell> cells;
  /// log-log fit of the mean distance against N at the last recorded step.
  std::optional<SlopeFit> slope;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  const ChaosCell& cell(std::size_t N, std::size_t n) const;
  /// Long format: N,n,q,mean,stderr,bound,variant (numbers with 17 significant digits).
  void write_csv(std::ostream& out) const;
  /// JSON sidecar: schema version, slope, notes and per-cell summaries.
  std::string json(const std::string& config_echo = "{}") const;
};

inline constexpr int kReportSchemaVersion = 1;

/// Mean-field flows eta_0..eta_horizon for one N (exact when the kernel supports the
/// representation, otherwise a surrogate cloud of multiplier * N particles).
std::vector<MeanFieldFlow> mean_field_flows(const ExperimentConfig& cfg, std::size_t N);

/// E W(eta^N_n, eta_n) over trials for every N and recorded n, with the bound curve.
ChaosReport run_rate_experiment(const ExperimentConfig& cfg);

/// Ordinary least squares of log(value) on log(N).
SlopeFit fit_log_slope(const std::vector<std::pair<double, double>>& pairs);

/// W_1(eta^{N,q}_n, eta_n^{(x)q}): each trajectory contributes (X^1_n, ..., X^q_n) as one
/// atom in R^{dq}; the reference is `trials` i.i.d. q-tuples from eta_n. Repeated over
/// `replicates` independent batches for the standard error. Requires trials >= 50.
ChaosReport marginal_chaos_experiment(const ExperimentConfig& cfg);

struct TensorizationResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  /// 1 - (N)_q / N^q and whether it is <= q^2 / N.
  double deficit = 0.0;
  bool deficit_ok = false;
};

/// lhs = W(m(X)^{(x)q}, m(X)^{(.)q}) with the product cost, rhs = 2 (q^3/N) mean ||x^i||.
/// Enforces N <= 20 for q = 2, N <= 8 for q = 3 and N^q + (N)_q <= 4096 otherwise.
TensorizationResult tensorization_check(const PointCloud& points, int q, const CostSpec& cost = CostSpec::euclidean(1.0));

struct MomentAuditRow {
  std::size_t n = 0;
  /// Mean and standard error of V(X^1_n) over trials.
  double mean = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// Tracks V(X^1_n) for n = 0..horizon over cfg.trials runs of the particle system with
/// N = cfg.N_list.front(), against moment_bound_sequence(dc, eta0(V), horizon).
/// pass means mean + 2 stderr <= bound.
std::vector<MomentAuditRow> moment_trajectory_audit(const ExperimentConfig& cfg, const DriftConstants& dc);

/// `count` independent snapshots of the sharp particle system (N particles started
/// i.i.d. from U_d, after `steps` steps). Each snapshot is an exchangeable sample.
std::vector<PointCloud> sharp_snapshots(int dim, std::size_t N, std::size_t count, std::size_t steps,
                                        std::uint64_t seed);

}  // namespace nlmc
