#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlmc/errors.hpp"

namespace nlmc::detail {

namespace {
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
}

NetworkSimplex::NetworkSimplex(std::vector<std::int64_t> supply, std::vector<std::int64_t> demand,
                               double max_cost_hint)
    : n_supply_(supply.size()),
      n_demand_(demand.size()),
      nodes_(supply.size() + demand.size()),
      root_(supply.size() + demand.size()) {
  std::int64_t total_supply = 0;
  std::int64_t total_demand = 0;
  for (const auto s : supply) {
    if (s <= 0) throw std::invalid_argument("NetworkSimplex: supplies must be positive");
    total_supply += s;
  }
  for (const auto t : demand) {
    if (t <= 0) throw std::invalid_argument("NetworkSimplex: demands must be positive");
    total_demand += t;
  }
  if (total_supply != total_demand) throw std::invalid_argument("NetworkSimplex: unbalanced problem");

  // Any route through the real arcs is cheaper than one unit through an artificial
  // demand arc, so artificial flow is driven out whenever the arc set allows it.
  big_cost_ = (std::max(max_cost_hint, 0.0) + 1.0) * static_cast<double>(nodes_ + 1);
  tolerance_ = 64.0 * std::numeric_limits<double>::epsilon() * big_cost_;

  const std::size_t all = nodes_ + 1;
  pi_.assign(all, 0.0);
  parent_.assign(all, kNone);
  pred_.assign(all, kNone);
  dir_.assign(all, kUp);
  size_.assign(all, 1);
  first_child_.assign(all, kNone);
  next_sib_.assign(all, kNone);
  prev_sib_.assign(all, kNone);
  size_[root_] = all;

  src_.reserve(nodes_);
  tgt_.reserve(nodes_);
  cost_.reserve(nodes_);
  flow_.reserve(nodes_);
  for (std::size_t v = 0; v < nodes_; ++v) {
    if (v < n_supply_) {
      src_.push_back(v);
      tgt_.push_back(root_);
      cost_.push_back(0.0);
      flow_.push_back(supply[v]);
      dir_[v] = kUp;
      pi_[v] = 0.0;
    } else {
      src_.push_back(root_);
      tgt_.push_back(v);
      cost_.push_back(big_cost_);
      flow_.push_back(demand[v - n_supply_]);
      dir_[v] = kDown;
      pi_[v] = big_cost_;
    }
    pred_[v] = v;
    attach_child(root_, v);
  }
}

void NetworkSimplex::add_arc(std::size_t supply_node, std::size_t demand_node, double cost) {
  src_.push_back(supply_node);
  tgt_.push_back(n_supply_ + demand_node);
  cost_.push_back(cost);
  flow_.push_back(0);
}

void NetworkSimplex::detach_child(std::size_t v) {
  const std::size_t p = parent_[v];
  if (prev_sib_[v] != kNone) {
    next_sib_[prev_sib_[v]] = next_sib_[v];
  } else {
    first_child_[p] = next_sib_[v];
  }
  if (next_sib_[v] != kNone) prev_sib_[next_sib_[v]] = prev_sib_[v];
  next_sib_[v] = prev_sib_[v] = kNone;
}

void NetworkSimplex::attach_child(std::size_t parent, std::size_t v) {
  parent_[v] = parent;
  prev_sib_[v] = kNone;
  next_sib_[v] = first_child_[parent];
  if (first_child_[parent] != kNone) prev_sib_[first_child_[parent]] = v;
  first_child_[parent] = v;
}

void NetworkSimplex::shift_subtree(std::size_t top, double sigma) {
  // Only potential differences matter, so shift whichever side of the tree is smaller.
  const bool inside = 2 * size_[top] <= size_[root_];
  const std::size_t start = inside ? top : root_;
  const double amount = inside ? sigma : -sigma;
  stack_.clear();
  stack_.push_back(start);
  while (!stack_.empty()) {
    const std::size_t v = stack_.back();
    stack_.pop_back();
    pi_[v] += amount;
    for (std::size_t c = first_child_[v]; c != kNone; c = next_sib_[c]) {
      if (inside || c != top) stack_.push_back(c);
    }
  }
}

void NetworkSimplex::greedy_start() {
  const std::size_t m = src_.size();
  std::vector<std::size_t> order;
  order.reserve(m - nodes_);
  for (std::size_t e = nodes_; e < m; ++e) order.push_back(e);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return cost_[x] < cost_[y]; });

  std::vector<std::int64_t> left(nodes_);
  for (std::size_t v = 0; v < nodes_; ++v) left[v] = flow_[v];
  std::vector<std::vector<std::size_t>> incident(nodes_);
  for (const auto e : order) {
    const std::size_t s = src_[e];
    const std::size_t t = tgt_[e];
    const std::int64_t amount = std::min(left[s], left[t]);
    if (amount == 0) continue;
    flow_[e] = amount;
    left[s] -= amount;
    left[t] -= amount;
    incident[s].push_back(e);
    incident[t].push_back(e);
  }

  for (std::size_t v = 0; v <= nodes_; ++v) first_child_[v] = next_sib_[v] = prev_sib_[v] = kNone;
  std::vector<char> seen(nodes_, 0);
  std::vector<std::size_t> component;
  for (std::size_t start = 0; start < nodes_; ++start) {
    if (seen[start]) continue;
    component.clear();
    component.push_back(start);
    seen[start] = 1;
    for (std::size_t k = 0; k < component.size(); ++k) {
      for (const auto e : incident[component[k]]) {
        const std::size_t w = src_[e] == component[k] ? tgt_[e] : src_[e];
        if (!seen[w]) {
          seen[w] = 1;
          component.push_back(w);
        }
      }
    }
    std::size_t anchor = kNone;
    for (const auto v : component) {
      if (left[v] > 0) anchor = v;
    }
    if (anchor == kNone) {
      for (const auto v : component) {
        if (v < n_supply_) {
          anchor = v;
          break;
        }
      }
    }
    for (const auto v : component) flow_[v] = v == anchor ? left[v] : 0;

    // Hang the tree below the root through the anchor's artificial arc.
    attach_child(root_, anchor);
    pred_[anchor] = anchor;
    dir_[anchor] = anchor < n_supply_ ? kUp : kDown;
    stack_.clear();
    stack_.push_back(anchor);
    while (!stack_.empty()) {
      const std::size_t v = stack_.back();
      stack_.pop_back();
      for (const auto e : incident[v]) {
        if (e == pred_[v]) continue;
        const std::size_t w = src_[e] == v ? tgt_[e] : src_[e];
        attach_child(v, w);
        pred_[w] = e;
        dir_[w] = src_[e] == w ? kUp : kDown;
        stack_.push_back(w);
      }
    }
  }
  recompute_sizes();
  refresh_potentials();
}

void NetworkSimplex::recompute_sizes() {
  // Children are visited after their parents in preorder, so a reverse sweep
  // accumulates subtree sizes bottom-up.
  std::vector<std::size_t> preorder;
  preorder.reserve(nodes_ + 1);
  stack_.clear();
  stack_.push_back(root_);
  while (!stack_.empty()) {
    const std::size_t v = stack_.back();
    stack_.pop_back();
    preorder.push_back(v);
    for (std::size_t c = first_child_[v]; c != kNone; c = next_sib_[c]) stack_.push_back(c);
  }
  for (const auto v : preorder) size_[v] = 1;
  for (std::size_t k = preorder.size(); k-- > 1;) size_[parent_[preorder[k]]] += size_[preorder[k]];
}

std::size_t NetworkSimplex::find_entering(double& reduced) {
  const std::size_t m = src_.size();
  const auto block = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
  std::size_t best = kNone;
  double best_value = -tolerance_;
  std::size_t scanned_in_block = 0;
  for (std::size_t count = 0; count < m; ++count) {
    const std::size_t e = next_arc_;
    next_arc_ = next_arc_ + 1 == m ? 0 : next_arc_ + 1;
    const double r = cost_[e] + pi_[src_[e]] - pi_[tgt_[e]];
    if (r < best_value) {
      best_value = r;
      best = e;
    }
    if (++scanned_in_block == block) {
      if (best != kNone) break;
      scanned_in_block = 0;
    }
  }
  reduced = best_value;
  return best;
}

void NetworkSimplex::pivot(std::size_t in_arc) {
  const std::size_t first = src_[in_arc];
  const std::size_t second = tgt_[in_arc];

  std::size_t a = first;
  std::size_t b = second;
  // An ancestor always has the larger subtree, so climbing the smaller side is safe.
  while (a != b) {
    if (size_[a] < size_[b]) {
      a = parent_[a];
    } else {
      b = parent_[b];
    }
  }
  const std::size_t join = a;

  // Leaving arc: ties go to the last blocking arc met when walking the cycle in its
  // orientation, which keeps the basis strongly feasible.
  std::int64_t delta = std::numeric_limits<std::int64_t>::max();
  std::size_t u_out = kNone;
  int side = 0;
  for (std::size_t u = first; u != join; u = parent_[u]) {
    if (dir_[u] == kUp && flow_[pred_[u]] < delta) {
      delta = flow_[pred_[u]];
      u_out = u;
      side = 1;
    }
  }
  for (std::size_t u = second; u != join; u = parent_[u]) {
    if (dir_[u] == kDown && flow_[pred_[u]] <= delta) {
      delta = flow_[pred_[u]];
      u_out = u;
      side = 2;
    }
  }
  if (side == 0) throw NumericError("NetworkSimplex: unbounded cycle");

  if (delta > 0) {
    flow_[in_arc] += delta;
    for (std::size_t u = first; u != join; u = parent_[u]) flow_[pred_[u]] -= dir_[u] * delta;
    for (std::size_t u = second; u != join; u = parent_[u]) flow_[pred_[u]] += dir_[u] * delta;
  }

  const std::size_t u_in = side == 1 ? first : second;
  const std::size_t v_in = side == 1 ? second : first;

  // Re-root the subtree hanging below the leaving arc at u_in by reversing the path
  // u_in -> u_out.
  const std::size_t moved = size_[u_out];
  for (std::size_t u = parent_[u_out]; u != join; u = parent_[u]) size_[u] -= moved;
  for (std::size_t u = v_in; u != join; u = parent_[u]) size_[u] += moved;

  path_.clear();
  for (std::size_t u = u_in;; u = parent_[u]) {
    path_.push_back(u);
    if (u == u_out) break;
  }
  path_pred_.resize(path_.size());
  path_dir_.resize(path_.size());
  for (std::size_t i = 0; i < path_.size(); ++i) {
    path_pred_[i] = pred_[path_[i]];
    path_dir_[i] = dir_[path_[i]];
    detach_child(path_[i]);
  }
  // After reversal p_i owns everything of the old u_out subtree except the old subtree
  // of p_{i-1}.
  for (std::size_t i = path_.size() - 1; i > 0; --i) size_[path_[i]] = moved - size_[path_[i - 1]];
  size_[u_in] = moved;
  for (std::size_t i = 0; i + 1 < path_.size(); ++i) {
    attach_child(path_[i], path_[i + 1]);
    pred_[path_[i + 1]] = path_pred_[i];
    dir_[path_[i + 1]] = -path_dir_[i];
  }
  attach_child(v_in, u_in);
  pred_[u_in] = in_arc;
  dir_[u_in] = u_in == src_[in_arc] ? kUp : kDown;

  const double sigma = pi_[v_in] - dir_[u_in] * cost_[in_arc] - pi_[u_in];
  shift_subtree(u_in, sigma);
}

void NetworkSimplex::refresh_potentials() {
  pi_[root_] = 0.0;
  stack_.clear();
  for (std::size_t c = first_child_[root_]; c != kNone; c = next_sib_[c]) stack_.push_back(c);
  while (!stack_.empty()) {
    const std::size_t v = stack_.back();
    stack_.pop_back();
    const double c = cost_[pred_[v]];
    pi_[v] = dir_[v] == kUp ? pi_[parent_[v]] - c : pi_[parent_[v]] + c;
    for (std::size_t w = first_child_[v]; w != kNone; w = next_sib_[w]) stack_.push_back(w);
  }
}

std::size_t NetworkSimplex::solve() {
  std::size_t pivots = 0;
  while (true) {
    double reduced = 0.0;
    std::size_t e = find_entering(reduced);
    if (e == kNone) {
      refresh_potentials();
      e = find_entering(reduced);
      if (e == kNone) return pivots;
    }
    pivot(e);
    ++pivots;
  }
}

std::int64_t NetworkSimplex::artificial_flow() const {
  std::int64_t total = 0;
  for (std::size_t v = n_supply_; v < nodes_; ++v) total += flow_[v];
  return total;
}

std::vector<NetworkSimplex::ArcFlow> NetworkSimplex::positive_flows() const {
  std::vector<ArcFlow> out;
  for (std::size_t e = nodes_; e < src_.size(); ++e) {
    if (flow_[e] > 0) out.push_back({src_[e], tgt_[e] - n_supply_, flow_[e], cost_[e]});
  }
  return out;
}

}  // namespace nlmc::detail
