#include "nlmc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nlmc/errors.hpp"

namespace nlmc {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (const double v : xs) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite coordinate");
  }
}

}  // namespace

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw std::invalid_argument("Point: dimension must be >= 1");
  require_finite(coords_, "Point");
}

PointCloud::PointCloud(int dim, std::vector<double> flat) : dim_(dim), flat_(std::move(flat)) {
  if (dim_ < 1) throw std::invalid_argument("PointCloud: dimension must be >= 1");
  if (flat_.size() % static_cast<std::size_t>(dim_) != 0) {
    throw std::invalid_argument("PointCloud: coordinate count is not a multiple of the dimension");
  }
}

PointCloud::PointCloud(int dim, std::size_t count)
    : PointCloud(dim, std::vector<double>(count * static_cast<std::size_t>(dim < 1 ? 1 : dim), 0.0)) {}

PointCloud PointCloud::from_points(std::span<const Point> points) {
  if (points.empty()) throw std::invalid_argument("PointCloud: no points");
  const int d = points.front().dim();
  std::vector<double> flat;
  flat.reserve(points.size() * static_cast<std::size_t>(d));
  for (const auto& p : points) {
    if (p.dim() != d) throw std::invalid_argument("PointCloud: mixed dimensions");
    flat.insert(flat.end(), p.coords().begin(), p.coords().end());
  }
  return PointCloud(d, std::move(flat));
}

Point PointCloud::point(std::size_t i) const {
  const auto row = (*this)[i];
  return Point(std::vector<double>(row.begin(), row.end()));
}

void PointCloud::push_back(std::span<const double> coords) {
  if (dim_ == 0) dim_ = static_cast<int>(coords.size());
  if (static_cast<int>(coords.size()) != dim_) throw std::invalid_argument("PointCloud: dimension mismatch");
  flat_.insert(flat_.end(), coords.begin(), coords.end());
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (const double v : x) s += v * v;
  return std::sqrt(s);
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] - y[i];
    s += t * t;
  }
  return std::sqrt(s);
}

DiscreteMeasure::DiscreteMeasure(PointCloud support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (weights_.empty() || support_.size() != weights_.size()) {
    throw std::invalid_argument("DiscreteMeasure: support must be nonempty and match the weights");
  }
  require_finite(support_.flat(), "DiscreteMeasure");
  double total = 0.0;
  for (const double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("DiscreteMeasure: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total) + ", not 1");
  }
}

DiscreteMeasure DiscreteMeasure::uniform(PointCloud support) {
  const std::size_t n = support.size();
  if (n == 0) throw std::invalid_argument("DiscreteMeasure::uniform: empty support");
  return DiscreteMeasure(std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
  return DiscreteMeasure(PointCloud(x.dim(), std::vector<double>(x.coords().begin(), x.coords().end())), {1.0});
}

double DiscreteMeasure::integrate(const std::function<double(std::span<const double>)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * f(atom(i));
  return s;
}

std::vector<double> DiscreteMeasure::mean() const {
  std::vector<double> m(static_cast<std::size_t>(dim()), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto x = atom(i);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += weights_[i] * x[k];
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::merged(double tolerance, std::vector<std::vector<std::size_t>>* groups) const {
  const std::size_t n = size();
  const auto d = static_cast<std::size_t>(dim());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto xa = atom(a);
    const auto xb = atom(b);
    for (std::size_t k = 0; k < d; ++k) {
      if (xa[k] != xb[k]) return xa[k] < xb[k];
    }
    return a < b;
  });

  auto close = [&](std::size_t a, std::size_t b) {
    const auto xa = atom(a);
    const auto xb = atom(b);
    for (std::size_t k = 0; k < d; ++k) {
      if (std::abs(xa[k] - xb[k]) > tolerance) return false;
    }
    return true;
  };

  std::vector<std::vector<std::size_t>> members;
  for (std::size_t pos = 0; pos < n;) {
    std::vector<std::size_t> group{order[pos]};
    std::size_t next = pos + 1;
    while (next < n && close(order[pos], order[next])) group.push_back(order[next++]);
    std::sort(group.begin(), group.end());
    members.push_back(std::move(group));
    pos = next;
  }
  // Keep atoms in order of first appearance so merging is stable for callers.
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  PointCloud support(dim(), std::vector<double>{});
  std::vector<double> weights;
  weights.reserve(members.size());
  double total = 0.0;
  for (const auto& group : members) {
    support.push_back(atom(group.front()));
    double w = 0.0;
    for (const auto i : group) w += weights_[i];
    weights.push_back(w);
    total += w;
  }
  for (auto& w : weights) w /= total;
  if (groups != nullptr) *groups = std::move(members);
  return DiscreteMeasure(std::move(support), std::move(weights));
}

ConcaveProfile ConcaveProfile::exponential_blend(double lower, double upper, double scale) {
  if (!(lower > 0.0) || !(upper >= lower) || !(scale > 0.0)) {
    throw std::invalid_argument("exponential_blend: need 0 < lower <= upper and scale > 0");
  }
  ConcaveProfile profile;
  profile.lower_slope = lower;
  profile.upper_slope = upper;
  profile.name = "exponential-blend";
  profile.rho = [lower, upper, scale](double r) {
    return lower * r - (upper - lower) * scale * std::expm1(-r / scale);
  };
  return profile;
}

CostSpec CostSpec::euclidean(double p) {
  CostSpec c;
  c.kind_ = Kind::kEuclideanPower;
  c.p_ = p;
  c.validate();
  return c;
}

CostSpec CostSpec::modified(ConcaveProfile profile) {
  CostSpec c;
  c.kind_ = Kind::kModified;
  c.profile_ = std::move(profile);
  c.validate();
  return c;
}

double CostSpec::of_separation(double r) const {
  if (kind_ == Kind::kModified) return profile_.rho(r);
  if (p_ == 1.0) return r;
  if (p_ == 2.0) return r * r;
  return std::pow(r, p_);
}

double CostSpec::finalize(double total_cost) const {
  const double t = std::max(total_cost, 0.0);
  if (kind_ == Kind::kModified || p_ == 1.0) return t;
  if (p_ == 2.0) return std::sqrt(t);
  return std::pow(t, 1.0 / p_);
}

void CostSpec::validate() const {
  if (kind_ == Kind::kEuclideanPower) {
    if (!(p_ >= 1.0) || !std::isfinite(p_)) throw std::invalid_argument("CostSpec: power p must be >= 1");
    return;
  }
  if (!profile_.rho) throw std::invalid_argument("CostSpec: missing rho");
  if (!(profile_.lower_slope > 0.0) || profile_.upper_slope < profile_.lower_slope) {
    throw std::invalid_argument("CostSpec: need 0 < lower slope <= upper slope");
  }
  if (std::abs(profile_.rho(0.0)) > 1e-15) throw std::invalid_argument("CostSpec: rho(0) must be 0");
  double previous = 0.0;
  for (int k = 1; k <= 400; ++k) {
    const double r = 1e-3 * std::pow(1.05, k);
    const double value = profile_.rho(r);
    if (value < previous - 1e-15) throw std::invalid_argument("CostSpec: rho is not nondecreasing");
    const double ratio = value / r;
    if (ratio < profile_.lower_slope * (1 - 1e-12) || ratio > profile_.upper_slope * (1 + 1e-12)) {
      throw std::invalid_argument("CostSpec: rho(r)/r leaves [lower, upper] at r = " + std::to_string(r));
    }
    previous = value;
  }
}

void LyapunovSpec::validate() const {
  if (kind == Kind::kPower && !(parameter >= 1.0)) {
    throw std::invalid_argument("LyapunovSpec: power p must be >= 1");
  }
  if (kind == Kind::kSquareExponential && !(parameter > 0.0)) {
    throw std::invalid_argument("LyapunovSpec: alpha must be > 0");
  }
  if (!std::isfinite(parameter)) throw std::invalid_argument("LyapunovSpec: non-finite parameter");
}

double LyapunovSpec::operator()(std::span<const double> x) const {
  double sq = 0.0;
  for (const double v : x) sq += v * v;
  if (kind == Kind::kSquareExponential) return std::exp(parameter * sq);
  if (parameter == 2.0) return sq;
  return std::pow(std::sqrt(sq), parameter);
}

double moment(const DiscreteMeasure& mu, const LyapunovSpec& V) {
  V.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * V(mu.atom(i));
  return s;
}

double falling_factorial(std::size_t n, int q) {
  double r = 1.0;
  for (int k = 0; k < q; ++k) r *= static_cast<double>(n) - k;
  return r;
}

namespace {

// Enumerates index tuples of length q over [0, n) in lexicographic order, calling
// visit(tuple) for every tuple (injective ones only when `distinct`).
template <typename Visit>
void for_each_tuple(std::size_t n, int q, bool distinct, Visit&& visit) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(q), 0);
  while (true) {
    bool ok = true;
    if (distinct) {
      for (int a = 0; a < q && ok; ++a) {
        for (int b = a + 1; b < q; ++b) {
          if (idx[a] == idx[b]) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok) visit(idx);
    int pos = q - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) return;
  }
}

DiscreteMeasure tuple_measure(const PointCloud& points, int q, std::size_t cap, bool distinct) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("tuple measure: no points");
  if (q < 1) throw std::invalid_argument("tuple measure: q must be >= 1");
  if (distinct && static_cast<std::size_t>(q) > n) throw std::invalid_argument("tuple measure: q > N");
  const double count = distinct ? falling_factorial(n, q) : std::pow(static_cast<double>(n), q);
  if (count > static_cast<double>(cap)) {
    throw CapacityError("tuple measure: " + std::to_string(count) + " atoms exceeds cap " + std::to_string(cap));
  }
  const int d = points.dim();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(count) * static_cast<std::size_t>(d * q));
  for_each_tuple(n, q, distinct, [&](const std::vector<std::size_t>& idx) {
    for (const auto i : idx) {
      const auto x = points[i];
      flat.insert(flat.end(), x.begin(), x.end());
    }
  });
  const auto atoms = flat.size() / static_cast<std::size_t>(d * q);
  DiscreteMeasure raw(PointCloud(d * q, std::move(flat)),
                      std::vector<double>(atoms, 1.0 / static_cast<double>(atoms)));
  return raw.merged();
}

}  // namespace

DiscreteMeasure tensor_product_measure(const PointCloud& points, int q, std::size_t cap) {
  return tuple_measure(points, q, cap, false);
}

DiscreteMeasure distinct_tuple_measure(const PointCloud& points, int q, std::size_t cap) {
  return tuple_measure(points, q, cap, true);
}

}  // namespace nlmc
