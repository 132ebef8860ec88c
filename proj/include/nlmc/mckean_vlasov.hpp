#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlmc/bounds.hpp"
#include "nlmc/kernel.hpp"
#include "nlmc/measure.hpp"

namespace nlmc {

/// Gradient field of a potential on R^d.
class VectorField {
 public:
  enum class Kind { kZero, kLinear, kDoubleWell, kUser };
  using Map = std::function<void(std::span<const double> x, std::span<double> out)>;

  static VectorField zero() { return VectorField(Kind::kZero, 0.0, {}); }
  /// Gradient of k ||x||^2 / 2, i.e. x -> k x.
  static VectorField linear(double k) { return VectorField(Kind::kLinear, k, {}); }
  /// Gradient of ||x||^4/4 - ||x||^2/2, i.e. x -> (||x||^2 - 1) x.
  static VectorField double_well() { return VectorField(Kind::kDoubleWell, 0.0, {}); }
  static VectorField user(Map map, std::string name = "user") {
    VectorField f(Kind::kUser, 0.0, std::move(map));
    f.name_ = std::move(name);
    return f;
  }

  Kind kind() const { return kind_; }
  bool builtin() const { return kind_ != Kind::kUser; }
  /// True for zero and linear fields; coefficient() then gives k (0 for zero).
  bool is_linear() const { return kind_ == Kind::kZero || kind_ == Kind::kLinear; }
  double coefficient() const { return k_; }
  const std::string& name() const { return name_; }

  void operator()(std::span<const double> x, std::span<double> out) const;

 private:
  VectorField(Kind kind, double k, Map map);

  Kind kind_;
  double k_;
  Map map_;
  std::string name_;
};

/// Parameters of the Euler-Maruyama kernel N(x - delta grad V(x) - delta (grad W * eta)(x), 2 delta I).
struct MvParams {
  int dim = 1;
  double delta = 0.1;
  VectorField grad_V = VectorField::zero();
  VectorField grad_W = VectorField::zero();
  /// Hess V >= lambda_V I, Hess W >= lambda_W I; grad V is C_V-Lipschitz, grad W is C_W-Lipschitz.
  double lambda_V = 0.0;
  double lambda_W = 0.0;
  double C_V = 0.0;
  double C_W = 0.0;
  double grad_V0_norm = 0.0;
  /// Radius of the ball on which declared constants are audited (and, for the double
  /// well, on which its C_V is valid).
  double audit_radius = 2.0;

  /// V = lambda ||x||^2 / 2 and W = kappa ||u||^2 / 2 with their exact constants.
  static MvParams quadratic(int dim, double delta, double lambda_v, double kappa_w);
  /// V = ||x||^4/4 - ||x||^2/2 (lambda_V = -1, C_V = max(3 r^2 - 1, 1) on the ball of
  /// radius r) with quadratic W. The Lipschitz constant only holds on that ball.
  static MvParams double_well(int dim, double delta, double radius, double kappa_w);

  /// Hard checks: dim >= 1, delta > 0, finite constants, C >= max(lambda, 0),
  /// grad W(0) = 0 for built-in W.
  void validate() const;
};

/// Finite-difference audit of the declared constants on random pairs inside the audit
/// ball. Returns one warning per violated constant (5% slack); never throws for violations.
std::vector<std::string> audit_mv_params(const MvParams& params, std::size_t samples = 400, std::uint64_t seed = 1);

/// (grad W * eta)(x) = sum_j w_j grad W(x - y_j).
Point conv_grad_w(std::span<const double> x, const DiscreteMeasure& eta, const VectorField& grad_W);

/// Kernel registered as "mckean-vlasov-em". Exposes its Gaussian structure, and for
/// linear fields advances single Gaussian flows exactly.
std::unique_ptr<NonlinearKernel> mv_kernel(const MvParams& params);

struct MvTauBound {
  double value = 0.0;
  /// Two-sided regularity constants: c = sqrt(1 - 2 delta (lV + lW) + delta^2 (CV + CW)^2),
  /// C = sqrt(2) delta C_W.
  double c = 0.0;
  double C = 0.0;
};

/// sqrt(1 - 2 delta (lambda_V + lambda_W) + delta^2 (C_V + C_W)^2) + sqrt(2) delta C_W.
/// Throws NumericError naming the step-size interval when the radicand is negative.
MvTauBound mv_tau1_bound(const MvParams& params);

/// Drift constants for V_2(x) = ||x||^2:
///   a = 1 + delta (2 - 2 (lambda_V + lambda_W)) + 4 delta^2 (C_V^2 + C_W^2)
///   b = delta (2 + 4 delta) C_W^2
///   c = (1 + 4 delta) delta ||grad V(0)||^2 + 2 d delta
DriftConstants mv_moment_constants(const MvParams& params);

}  // namespace nlmc
