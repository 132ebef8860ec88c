#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nlmc {

/// A single state in R^d. Coordinates must be finite.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> coords);
  Point(std::initializer_list<double> coords) : Point(std::vector<double>(coords)) {}

  int dim() const { return static_cast<int>(coords_.size()); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  std::vector<double> coords_;
};

/// N points of a common dimension stored contiguously (row-major, one point per row).
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(int dim, std::vector<double> flat);
  PointCloud(int dim, std::size_t count);
  static PointCloud from_points(std::span<const Point> points);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : flat_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return flat_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {flat_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<double> mutable_row(std::size_t i) {
    return {flat_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  Point point(std::size_t i) const;
  void push_back(std::span<const double> coords);

  const std::vector<double>& flat() const { return flat_; }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  int dim_ = 0;
  std::vector<double> flat_;
};

double norm(std::span<const double> x);
double distance(std::span<const double> x, std::span<const double> y);

/// Finitely supported probability measure: atoms plus nonnegative weights summing to one.
class DiscreteMeasure {
 public:
  /// Validates: nonempty support, finite coordinates, weights >= 0 summing to 1 within 1e-12.
  DiscreteMeasure(PointCloud support, std::vector<double> weights);

  /// m(x) = (1/N) sum delta_{x^i}; duplicates are kept as separate atoms.
  static DiscreteMeasure uniform(PointCloud support);
  static DiscreteMeasure dirac(const Point& x);

  int dim() const { return support_.dim(); }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> atom(std::size_t i) const { return support_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const PointCloud& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Integral of f against the measure.
  double integrate(const std::function<double(std::span<const double>)>& f) const;
  std::vector<double> mean() const;

  /// Merges atoms whose coordinates agree to `tolerance` (componentwise), summing weights.
  /// `groups`, when given, receives for each merged atom the list of original indices.
  DiscreteMeasure merged(double tolerance = 1e-15,
                         std::vector<std::vector<std::size_t>>* groups = nullptr) const;

 private:
  PointCloud support_;
  std::vector<double> weights_;
};

/// Concave nondecreasing profile rho with rho(0) = 0 and lower*r <= rho(r) <= upper*r.
struct ConcaveProfile {
  std::function<double(double)> rho;
  double lower_slope = 1.0;
  double upper_slope = 1.0;
  std::string name;

  /// rho(r) = lower*r + (upper - lower)*scale*(1 - exp(-r/scale)): slope `upper` at the
  /// origin, decaying to `lower` at long range.
  static ConcaveProfile exponential_blend(double lower, double upper, double scale);
};

/// Ground cost for optimal transport: ||x - y||^p (result reported as the p-th root) or
/// rho(||x - y||) for a modified metric.
class CostSpec {
 public:
  enum class Kind { kEuclideanPower, kModified };

  static CostSpec euclidean(double p = 1.0);
  static CostSpec modified(ConcaveProfile profile);

  Kind kind() const { return kind_; }
  double power() const { return p_; }
  const ConcaveProfile& profile() const { return profile_; }
  bool is_w1() const { return kind_ == Kind::kEuclideanPower && p_ == 1.0; }

  /// Cost as a function of the Euclidean separation r.
  double of_separation(double r) const;
  double ground(std::span<const double> x, std::span<const double> y) const {
    return of_separation(distance(x, y));
  }
  /// Maps the optimal total ground cost to the reported distance.
  double finalize(double total_cost) const;

  /// Checks p >= 1, or rho(0) = 0, monotonicity and the slope sandwich on a sample grid.
  void validate() const;

 private:
  Kind kind_ = Kind::kEuclideanPower;
  double p_ = 1.0;
  ConcaveProfile profile_;
};

/// Lyapunov function V: ||x||^p (p >= 1) or exp(alpha ||x||^2) (alpha > 0).
struct LyapunovSpec {
  enum class Kind { kPower, kSquareExponential };
  Kind kind = Kind::kPower;
  double parameter = 2.0;

  static LyapunovSpec power(double p) { return {Kind::kPower, p}; }
  static LyapunovSpec square_exponential(double alpha) { return {Kind::kSquareExponential, alpha}; }

  void validate() const;
  double operator()(std::span<const double> x) const;
};

/// sum_i w_i V(x_i).
double moment(const DiscreteMeasure& mu, const LyapunovSpec& V);

/// Default cap on the number of atoms produced by the tuple constructions below.
inline constexpr std::size_t kDefaultTupleCap = 1u << 20;

/// m(X)^{(x)q}: all N^q index tuples with weight N^-q, on (R^d)^q (duplicates merged).
DiscreteMeasure tensor_product_measure(const PointCloud& points, int q,
                                       std::size_t cap = kDefaultTupleCap);

/// m(X)^{(.)q}: the (N)_q injective index tuples with weight 1/(N)_q (duplicates merged).
DiscreteMeasure distinct_tuple_measure(const PointCloud& points, int q,
                                       std::size_t cap = kDefaultTupleCap);

/// Falling factorial (N)_q = N!/(N-q)! as a double.
double falling_factorial(std::size_t n, int q);

}  // namespace nlmc
