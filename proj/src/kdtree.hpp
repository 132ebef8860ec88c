#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "nlmc/measure.hpp"

namespace nlmc::detail {

/// Static kd-tree over a point cloud answering k-nearest-neighbour queries in the
/// Euclidean metric. Used only to seed candidate arcs for large transport problems.
class KdTree {
 public:
  explicit KdTree(const PointCloud& points) : points_(points), index_(points.size()) {
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    if (!index_.empty()) build(0, index_.size());
  }

  /// Sets per-point keys used by collect_below (one per point, in cloud order).
  void set_keys(const std::vector<double>& keys) {
    keys_ = &keys;
    node_max_.assign(nodes_.size(), -INFINITY);
    for (std::size_t id = nodes_.size(); id-- > 0;) {
      const Node& node = nodes_[id];
      if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) node_max_[id] = std::max(node_max_[id], keys[index_[i]]);
      } else {
        node_max_[id] = std::max(node_max_[node.left], node_max_[node.right]);
      }
    }
  }

  /// Calls out(j) for every point j with cost(|x - y_j|) < key_j + offset, where cost is
  /// nondecreasing. Subtrees are skipped when even their bounding box cannot qualify.
  template <typename Cost, typename Out>
  void collect_below(std::span<const double> x, double offset, const Cost& cost, Out&& out) const {
    collect(0, x, offset, cost, out);
  }

  /// Indices of the k nearest points to x (fewer if the cloud is smaller), nearest first.
  std::vector<std::size_t> nearest(std::span<const double> x, std::size_t k) const {
    k = std::min(k, index_.size());
    std::priority_queue<std::pair<double, std::size_t>> heap;
    if (k > 0) search(0, x, k, heap);
    std::vector<std::size_t> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t box = 0;  // offset of this node's bounding box in boxes_
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };
  static constexpr std::size_t kLeafSize = 12;

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    const int d = points_.dim();
    nodes_.push_back({begin, end, boxes_.size()});
    int axis = 0;
    double widest = -1.0;
    for (int a = 0; a < d; ++a) {
      double lo = points_[index_[begin]][a];
      double hi = lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = points_[index_[i]][a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      boxes_.push_back(lo);
      boxes_.push_back(hi);
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = a;
      }
    }
    if (end - begin <= kLeafSize) return id;
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t p, std::size_t q) { return points_[p][axis] < points_[q][axis]; });
    const double split = points_[index_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t id, std::span<const double> x, std::size_t k,
              std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const auto p = points_[index_[i]];
        double s = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) {
          const double t = p[a] - x[a];
          s += t * t;
        }
        if (heap.size() < k) {
          heap.emplace(s, index_[i]);
        } else if (s < heap.top().first) {
          heap.pop();
          heap.emplace(s, index_[i]);
        }
      }
      return;
    }
    const double gap = x[static_cast<std::size_t>(node.axis)] - node.split;
    const std::size_t near = gap < 0 ? node.left : node.right;
    const std::size_t far = gap < 0 ? node.right : node.left;
    search(near, x, k, heap);
    if (heap.size() < k || gap * gap < heap.top().first) search(far, x, k, heap);
  }

  template <typename Cost, typename Out>
  void collect(std::size_t id, std::span<const double> x, double offset, const Cost& cost, Out& out) const {
    const Node& node = nodes_[id];
    if (node_max_[id] == -INFINITY) return;
    double gap2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double lo = boxes_[node.box + 2 * a];
      const double hi = boxes_[node.box + 2 * a + 1];
      const double g = x[a] < lo ? lo - x[a] : (x[a] > hi ? x[a] - hi : 0.0);
      gap2 += g * g;
    }
    if (cost(std::sqrt(gap2)) >= node_max_[id] + offset) return;
    if (node.axis >= 0) {
      collect(node.left, x, offset, cost, out);
      collect(node.right, x, offset, cost, out);
      return;
    }
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t j = index_[i];
      const auto p = points_[j];
      double s = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) s += (p[a] - x[a]) * (p[a] - x[a]);
      if (cost(std::sqrt(s)) < (*keys_)[j] + offset) out(j);
    }
  }

  const PointCloud& points_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;  // per node: (lo, hi) for each axis
  const std::vector<double>* keys_ = nullptr;
  std::vector<double> node_max_;
};

}  // namespace nlmc::detail
