#include "nlmc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlmc {

namespace {

double seq_at(const std::vector<double>& seq, std::size_t k, const char* what) {
  if (k == 0) throw std::out_of_range(std::string(what) + ": steps are numbered from 1");
  if (seq.size() == 1) return seq[0];
  if (k > seq.size()) {
    throw std::out_of_range(std::string(what) + ": step " + std::to_string(k) + " beyond configured horizon " +
                            std::to_string(seq.size()));
  }
  return seq[k - 1];
}

}  // namespace

DriftConstants DriftConstants::homogeneous(double a, double b, double c, LyapunovSpec V) {
  DriftConstants dc;
  dc.a_seq = {a};
  dc.b_seq = {b};
  dc.c = c;
  dc.V = V;
  return dc;
}

double DriftConstants::a(std::size_t k) const { return seq_at(a_seq, k, "DriftConstants::a"); }
double DriftConstants::b(std::size_t k) const { return seq_at(b_seq, k, "DriftConstants::b"); }

bool DriftConstants::uniform_regime() const {
  const std::size_t len = std::max(a_seq.size(), b_seq.size());
  for (std::size_t k = 1; k <= len; ++k) {
    if (!(a(k) + b(k) < 1.0)) return false;
  }
  return true;
}

void DriftConstants::validate() const {
  if (a_seq.empty() || b_seq.empty()) throw std::invalid_argument("DriftConstants: empty coefficient sequence");
  if (a_seq.size() != 1 && b_seq.size() != 1 && a_seq.size() != b_seq.size()) {
    throw std::invalid_argument("DriftConstants: a and b sequences differ in length");
  }
  const std::size_t len = std::max(a_seq.size(), b_seq.size());
  for (std::size_t k = 1; k <= len; ++k) {
    const double ak = a(k);
    const double bk = b(k);
    if (!std::isfinite(ak) || !std::isfinite(bk) || ak < 0.0 || bk < 0.0) {
      throw std::invalid_argument("DriftConstants: a_n and b_n must be finite and nonnegative");
    }
    if (!(ak + bk > 0.0)) throw std::invalid_argument("DriftConstants: a_n + b_n must be positive");
  }
  if (!std::isfinite(c) || c < 0.0) throw std::invalid_argument("DriftConstants: c must be finite and >= 0");
  V.validate();
}

std::vector<double> moment_bound_sequence(const DriftConstants& dc, double eta0_V, std::size_t n) {
  dc.validate();
  if (!std::isfinite(eta0_V) || eta0_V < 0.0) {
    throw std::invalid_argument("moment_bound_sequence: eta0(V) must be finite and >= 0");
  }
  // Unrolling m_k = (a_k + b_k) m_{k-1} + c gives the closed form term by term.
  std::vector<double> out(n + 1);
  out[0] = eta0_V;
  for (std::size_t k = 1; k <= n; ++k) out[k] = (dc.a(k) + dc.b(k)) * out[k - 1] + dc.c;
  return out;
}

RateValue rate_function(double p, int d, double N) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("rate_function: p must be > 1");
  if (d < 1) throw std::invalid_argument("rate_function: d must be >= 1");
  if (!(N >= 1.0)) throw std::invalid_argument("rate_function: N must be >= 1");
  RateValue out;
  const double moment_term = std::pow(N, -(p - 1.0) / p);
  if (d >= 3) {
    out.branch = "d>=3";
    out.value = std::pow(N, -1.0 / d) + moment_term;
    const double critical = static_cast<double>(d) / (d - 1);
    if (std::fabs(p - critical) <= 1e-12 * critical) {
      out.excluded = true;
      out.note = "p = d/(d-1) is excluded from the d>=3 branch";
    }
  } else if (d == 2) {
    out.branch = "d=2";
    out.value = std::log(1.0 + N) / std::sqrt(N) + moment_term;
    out.note = "side condition printed as p != 2p, which holds for every p > 1";
  } else {
    out.branch = "d=1";
    out.value = 1.0 / std::sqrt(N) + moment_term;
    out.note = "side condition printed as p != 2p, which holds for every p > 1";
  }
  return out;
}

double PocBoundInputs::moment(std::size_t k) const {
  if (moments.size() == 1) return moments[0];
  if (k >= moments.size()) throw std::invalid_argument("PocBoundInputs: missing moment M_" + std::to_string(k));
  return moments[k];
}

double PocBoundInputs::tau_at(std::size_t j) const {
  if (j == 0) throw std::out_of_range("PocBoundInputs: tau is indexed from 1");
  if (tau.size() == 1) return tau[0];
  if (j > tau.size()) throw std::invalid_argument("PocBoundInputs: missing tau_" + std::to_string(j));
  return tau[j - 1];
}

void PocBoundInputs::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("PocBoundInputs: p must be > 1");
  if (d < 1) throw std::invalid_argument("PocBoundInputs: d must be >= 1");
  if (!(N >= 1.0)) throw std::invalid_argument("PocBoundInputs: N must be >= 1");
  if (q < 1 || static_cast<double>(q) > N) throw std::invalid_argument("PocBoundInputs: need 1 <= q <= N");
  if (!(C_pd > 0.0)) throw std::invalid_argument("PocBoundInputs: C_pd must be positive");
  if (moments.empty()) throw std::invalid_argument("PocBoundInputs: missing moments");
  for (const double m : moments) {
    if (!std::isfinite(m) || m < 0.0) throw std::invalid_argument("PocBoundInputs: moments must be finite and >= 0");
  }
  for (const double t : tau) {
    if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument("PocBoundInputs: tau must be finite and >= 0");
  }
}

namespace {

double root(double m, double p) { return std::pow(m, 1.0 / p); }

double scale(const PocBoundInputs& inp) { return inp.C_pd * std::pow(inp.N, -1.0 / inp.d); }

double tensor_term(const PocBoundInputs& inp) {
  const double q = static_cast<double>(inp.q);
  return 2.0 * q * q * q / inp.N * root(inp.moment(inp.n), inp.p);
}

// sum_{k=0}^{n} (M_k)^{1/p} prod_{j=k+1}^{n} tau(j), accumulated from k = n downward.
template <typename Tau>
double product_sum(const PocBoundInputs& inp, const std::vector<double>* moments, const Tau& tau) {
  double sum = 0.0;
  double product = 1.0;
  for (std::size_t k = inp.n + 1; k-- > 0;) {
    const double m = moments ? (*moments)[k] : inp.moment(k);
    sum += root(m, inp.p) * product;
    if (k > 0) product *= tau(k);
  }
  return sum;
}

}  // namespace

double poc_bound_general(const PocBoundInputs& inp) {
  inp.validate();
  if (inp.tau.empty() && inp.n > 0) throw std::invalid_argument("poc_bound_general: missing tau");
  const double sum = product_sum(inp, nullptr, [&](std::size_t j) { return inp.tau_at(j); });
  return scale(inp) * static_cast<double>(inp.q) * sum + tensor_term(inp);
}

CouplingBound poc_bound_coupling(const PocBoundInputs& inp) {
  inp.validate();
  if (!inp.two_sided) throw std::invalid_argument("poc_bound_coupling: missing two-sided constants (c, C)");
  const auto [c, C] = *inp.two_sided;
  if (!(c >= 0.0) || !(C >= 0.0)) throw std::invalid_argument("poc_bound_coupling: c and C must be >= 0");
  CouplingBound out;
  if (C == 0.0) {
    out.measure_coupling_vanishes = true;
    return out;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < inp.n; ++k) {
    double inner = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
      inner += root(inp.moment(j), inp.p) * std::pow(c + C, static_cast<double>(k - j));
    }
    total += std::pow(c, static_cast<double>(inp.n - k - 1)) * inner;
  }
  out.value = scale(inp) * static_cast<double>(inp.q) * total;
  return out;
}

OneSidedBound poc_bound_oneside(const std::vector<double>& tau_local, const std::vector<double>& moments,
                                const PocBoundInputs& inp) {
  if (tau_local.size() != inp.n) {
    throw std::invalid_argument("poc_bound_oneside: need one local tau per step (got " +
                                std::to_string(tau_local.size()) + ", horizon " + std::to_string(inp.n) + ")");
  }
  if (moments.size() != inp.n + 1) {
    throw std::invalid_argument("poc_bound_oneside: need moments M_0..M_n");
  }
  PocBoundInputs local = inp;
  local.moments = moments;
  local.tau = tau_local;
  local.validate();
  OneSidedBound out;
  out.single = scale(local) * product_sum(local, &moments, [&](std::size_t j) { return tau_local[j - 1]; });
  out.tensorized = static_cast<double>(local.q) * out.single + tensor_term(local);
  return out;
}

double uniform_bound(double M_star, double tau_star, const PocBoundInputs& inp) {
  PocBoundInputs local = inp;
  local.moments = {M_star};
  local.validate();
  if (!(tau_star >= 0.0)) throw std::invalid_argument("uniform_bound: tau* must be >= 0");
  if (!(tau_star < 1.0)) throw std::invalid_argument("uniform_bound: tau* must be < 1 (the bound diverges)");
  return scale(local) * root(M_star, local.p) / (1.0 - tau_star) * static_cast<double>(local.q);
}

double KappaResult::n0(double N) const {
  if (!(N >= 1.0)) throw std::invalid_argument("kappa n0: N must be >= 1");
  return std::log(N) / (d * log_ratio);
}

KappaResult kappa(double alpha, double tau, int d) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("kappa: need 0 < alpha < 1");
  if (!(tau > 1.0) || !std::isfinite(tau)) throw std::invalid_argument("kappa: need tau > 1");
  if (d < 1) throw std::invalid_argument("kappa: d must be >= 1");
  KappaResult out;
  out.d = d;
  out.log_ratio = std::log(tau / alpha);
  out.kappa = std::log(1.0 / alpha) / (d * out.log_ratio);
  return out;
}

}  // namespace nlmc
