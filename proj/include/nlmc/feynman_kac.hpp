#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlmc/bounds.hpp"
#include "nlmc/kernel.hpp"
#include "nlmc/measure.hpp"

namespace nlmc {

/// Positive potential G with the constants the selection bounds consume.
struct Potential {
  std::function<double(std::span<const double>)> G;
  /// Lower bound eps and upper bound G_bar: eps <= G <= G_bar.
  double eps = 1.0;
  double G_bar = 1.0;
  /// ||G||_Lip, ||grad G||_inf and sup_z ||z|| ||grad G(z)||; NaN until declared.
  double lip_G = std::numeric_limits<double>::quiet_NaN();
  double grad_G_inf = std::numeric_limits<double>::quiet_NaN();
  double G_tilde = std::numeric_limits<double>::quiet_NaN();
  /// Acceptance scale of the selection kernel; lambda G <= 1.
  double lambda = 1.0;
  std::string name;

  /// G = g everywhere (the selection step is then a no-op when lambda g = 1).
  static Potential constant(double g, std::optional<double> lambda = std::nullopt);
  /// G(x) = eps0 + exp(-||x - y||^2 / 2): eps = eps0, G_bar = eps0 + 1,
  /// ||G||_Lip = ||grad G||_inf = exp(-1/2), G_tilde by a one-dimensional maximization.
  /// lambda defaults to 1/G_bar.
  static Potential bounded_gaussian(std::span<const double> y_obs, double eps0,
                                    std::optional<double> lambda = std::nullopt);
  /// Arbitrary positive G with user-declared bounds; regularity constants stay undeclared.
  static Potential user(std::function<double(std::span<const double>)> G, double eps, double G_bar,
                        std::optional<double> lambda = std::nullopt, std::string name = "user");

  double operator()(std::span<const double> x) const { return G(x); }
  /// 0 < eps <= G_bar, lambda in (0, 1], lambda G_bar <= 1.
  void validate() const;
};

/// Checks eps <= G <= G_bar on a regular grid over [-half_width, half_width]^d
/// (at most `points_per_axis`^d points). Returns warnings; never throws for violations.
std::vector<std::string> audit_potential(const Potential& G, int dim, double half_width = 10.0,
                                         std::size_t points_per_axis = 201);

/// Linear Gaussian mutation Y = rho x + sigma Z. For V_2 = ||x||^2 it satisfies
/// M V_2 <= rho^2 V_2 + d sigma^2 and tau_1(M) = |rho|.
struct GaussianMutation {
  double rho = 1.0;
  double sigma = 1.0;

  void validate() const;
  double a_tilde() const { return rho * rho; }
  double drift_constant(int dim) const { return dim * sigma * sigma; }
  double tau1() const { return std::fabs(rho); }
  void sample(std::span<const double> x, RandomStream& rng, std::span<double> out) const;
};

/// Potentials G_0, G_1, ... and mutations M^{(1)}, M^{(2)}, ...; K^{(n)}_eta = S^{(n-1)}_eta M^{(n)}.
/// A single potential or mutation is used for every step.
struct FkModel {
  int dim = 1;
  std::vector<Potential> potentials;
  std::vector<GaussianMutation> mutations;

  /// Bounded Gaussian likelihoods built from a fixed observation path y_0, y_1, ... (d = 1).
  static FkModel from_observations(const std::vector<double>& observations, double eps0,
                                   GaussianMutation mutation);

  /// G_n for n >= 0 and M^{(n)} for n >= 1; throw past the configured horizon.
  const Potential& potential(std::size_t n) const;
  const GaussianMutation& mutation(std::size_t n) const;
  /// Number of steps the model can run (unbounded when both sequences are homogeneous).
  std::optional<std::size_t> horizon() const;
  void validate() const;
};

/// Psi_G(eta): weights w_i G(x_i) / sum_j w_j G(x_j) on the same support.
DiscreteMeasure boltzmann_gibbs(const DiscreteMeasure& eta, const Potential& G);

/// Draw from S_eta(x, .): keep x with probability lambda G(x), otherwise resample from
/// Psi_G(eta) by inverse CDF. Consumes one uniform, plus one more on rejection.
Point selection_sample(std::span<const double> x, const DiscreteMeasure& eta, const Potential& G, RandomStream& rng);

/// eta S_eta computed from the lambda G mixture:
/// w_i lambda G(x_i) + (sum_j w_j (1 - lambda G(x_j))) Psi_G(eta)_i.
DiscreteMeasure selection_pushforward(const DiscreteMeasure& eta, const Potential& G);

/// Mutation matrix of a Gaussian kernel on a 1D grid: row i holds the masses of
/// N(rho x_i, sigma^2) on the cells around each grid point (CDF differences), stored
/// as a band. `leakage[i]` is the mass of row i falling outside the grid.
class GridTransition {
 public:
  GridTransition(std::size_t points, double half_width, const GaussianMutation& mutation);

  std::size_t size() const { return first_.size(); }
  double half_width() const { return half_width_; }
  /// Applies the row-normalized matrix to `weights`; returns the mass that leaked past
  /// the grid before renormalization.
  std::vector<double> apply(const std::vector<double>& weights, double* leaked) const;

 private:
  double half_width_;
  std::vector<std::size_t> first_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> leakage_;
};

/// Phi[eta] = Psi_G(eta) M on the grid: reweight by G, then propagate. Throws
/// NumericError when more than 1e-6 of the mass leaves the grid.
GridMeasure1D grid_flow_step(const GridMeasure1D& flow, const Potential& G, const GridTransition& transition);

/// Kernel registered as "feynman-kac-sisr": K^{(n)}_eta = S^{(n-1)}_eta M^{(n)}, with n taken
/// from the freeze step (or fixed when `fixed_step` is set). Advances 1D grid flows exactly.
std::unique_ptr<NonlinearKernel> sisr_kernel(const FkModel& model, std::optional<std::size_t> fixed_step = std::nullopt);

/// a = a_tilde lambda G_bar, b = a_tilde G_bar (1 - lambda eps) / eps, with the mutation
/// constant c. Verifies a + b = a_tilde G_bar / eps to 1e-12 (relative).
DriftConstants fk_moment_constants(double a_tilde, double lambda, double G_bar, double eps, double c = 0.0);

/// (||grad G||_inf + G_tilde + G_bar) / eps + ||G||_Lip G_bar M1(nu) / eps^2.
double psi_tau1_bound(const Potential& G, double M1_nu);

/// psi_tau1_bound(G, M1_nu) * tau_1(M).
double phi_tau1_bound(const Potential& G, double M1_nu, double tau_mutation);

}  // namespace nlmc
