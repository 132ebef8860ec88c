#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlmc/measure.hpp"

namespace nlmc {

/// Lyapunov drift coefficients: K^{(n)}_eta V(x) <= a_n V(x) + b_n eta(V) + c.
/// A sequence of length one is treated as homogeneous in n.
struct DriftConstants {
  std::vector<double> a_seq{0.0};
  std::vector<double> b_seq{0.0};
  double c = 0.0;
  LyapunovSpec V = LyapunovSpec::power(2.0);

  static DriftConstants homogeneous(double a, double b, double c, LyapunovSpec V = LyapunovSpec::power(2.0));

  bool is_homogeneous() const { return a_seq.size() == 1 && b_seq.size() == 1; }
  /// Coefficients of step k >= 1.
  double a(std::size_t k) const;
  double b(std::size_t k) const;
  /// a_n + b_n < 1 for every configured step: moments stay bounded uniformly in n.
  bool uniform_regime() const;
  /// a_n, b_n >= 0, a_n + b_n > 0, c >= 0, finite.
  void validate() const;
};

/// Bounds on eta_k(V) for k = 0..n (the same recursion bounds E[eta^N_k(V)] for the
/// particle system): A(k) eta_0(V) + c sum_{j=1}^{k} prod_{i=j+1}^{k} (a_i + b_i).
std::vector<double> moment_bound_sequence(const DriftConstants& dc, double eta0_V, std::size_t n);

struct RateValue {
  double value = 0.0;
  /// "d>=3", "d=2" or "d=1".
  std::string branch;
  /// The inputs sit on an excluded boundary of the empirical-measure estimate.
  bool excluded = false;
  std::string note;
};

/// Empirical-measure rate R_{1,p,d}(N) for W_1:
///   d >= 3: N^{-1/d} + N^{-(p-1)/p}
///   d = 2:  N^{-1/2} log(1 + N) + N^{-(p-1)/p}
///   d = 1:  N^{-1/2} + N^{-(p-1)/p}
/// For d >= 3 the estimate excludes p = d/(d-1); such inputs are evaluated and flagged.
/// The side conditions printed for d <= 2 ("p != 2p") hold for every p > 1 and are noted.
RateValue rate_function(double p, int d, double N);

struct PocBoundInputs {
  /// M^{(p)}_k for k = 0..n, or a single uniform M*.
  std::vector<double> moments;
  /// tau_j for j = 1..n (tau[j-1]), or a single uniform tau*.
  std::vector<double> tau;
  /// Two-sided regularity constants (c, C): W(K_mu(x), K_nu(y)) <= c|x-y| + C W(mu, nu).
  std::optional<std::pair<double, double>> two_sided;
  /// Constant of the empirical-measure estimate; no explicit value is known, so it defaults to 1.
  double C_pd = 1.0;
  int d = 3;
  double p = 2.0;
  std::size_t q = 1;
  double N = 1.0;
  std::size_t n = 0;

  double moment(std::size_t k) const;
  double tau_at(std::size_t j) const;
  void validate() const;
};

/// C_pd (q / N^{1/d}) sum_{k=0}^{n} (M_k)^{1/p} prod_{j=k+1}^{n} tau_j + 2 (q^3/N) (M_n)^{1/p}.
/// The product of per-step tau's upper-bounds tau_1(Phi_{k,n}).
double poc_bound_general(const PocBoundInputs& inp);

struct CouplingBound {
  double value = 0.0;
  /// Set when C = 0: the bound is reported as 0 because the measure coupling vanishes.
  bool measure_coupling_vanishes = false;
};

/// C_pd (q / N^{1/d}) sum_{k=0}^{n-1} c^{n-k-1} sum_{j=0}^{k} (M_j)^{1/p} (c + C)^{k-j}.
CouplingBound poc_bound_coupling(const PocBoundInputs& inp);

struct OneSidedBound {
  /// C_pd N^{-1/d} sum_k (M_k)^{1/p} prod_{j>k} tau_local[j]: bound on E W_1(eta^N_n, eta_n).
  double single = 0.0;
  /// q * single + 2 (q^3/N) (M_n)^{1/p}: bound on the q-marginal distance.
  double tensorized = 0.0;
};

/// Bound built from local one-sided constants tau_local[j-1] = tau_1(Phi_j)[eta_{j-1}], j = 1..n.
OneSidedBound poc_bound_oneside(const std::vector<double>& tau_local, const std::vector<double>& moments,
                                const PocBoundInputs& inp);

/// Uniform-in-time bound C_pd (M*)^{1/p} / (1 - tau*) * q / N^{1/d}. Requires tau* < 1.
double uniform_bound(double M_star, double tau_star, const PocBoundInputs& inp);

struct KappaResult {
  double kappa = 0.0;
  int d = 1;
  double log_ratio = 0.0;  // log(tau / alpha)
  /// Balancing horizon n0(N) = (1/d) log(N) / log(tau/alpha).
  double n0(double N) const;
};

/// kappa = (1/d) log(1/alpha) / log(tau/alpha) for 0 < alpha < 1 < tau.
KappaResult kappa(double alpha, double tau, int d);

}  // namespace nlmc
