#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace nlmc::detail {

/// Primal network simplex for the uncapacitated transportation problem.
///
/// Nodes [0, n_supply) carry integer supplies, nodes [n_supply, n_supply + n_demand)
/// integer demands (equal totals). Real arcs always run supply -> demand. The basis is
/// kept strongly feasible (leaving-arc tie rule), so degenerate pivots cannot cycle.
///
/// Arcs can be appended after a solve; the current basis stays valid and the next
/// solve() resumes from it. This is what the column-generation driver relies on.
class NetworkSimplex {
 public:
  NetworkSimplex(std::vector<std::int64_t> supply, std::vector<std::int64_t> demand,
                 double max_cost_hint);

  /// Appends arc supply_node -> demand_node (indices local to each side).
  void add_arc(std::size_t supply_node, std::size_t demand_node, double cost);

  /// Replaces the artificial starting basis by a greedy one: real arcs in order of
  /// increasing cost each ship as much as both endpoints still allow. Every shipment
  /// exhausts an endpoint, so the shipping arcs form a forest with at most one node of
  /// leftover mass per tree, which becomes that tree's link to the root. Must be called
  /// before the first solve().
  void greedy_start();

  /// Runs pivots until no arc has reduced cost below -tolerance. Returns the pivot count.
  std::size_t solve();

  /// Recomputes node potentials from the tree (removes accumulated round-off).
  void refresh_potentials();

  /// Potential convention: reduced cost of arc (s, t) is cost + pi[s] - pi[t].
  double supply_potential(std::size_t i) const { return pi_[i]; }
  double demand_potential(std::size_t j) const { return pi_[n_supply_ + j]; }
  double tolerance() const { return tolerance_; }

  /// Flow left on artificial arcs into demand nodes (positive means the current arc set
  /// cannot route all mass).
  std::int64_t artificial_flow() const;

  struct ArcFlow {
    std::size_t supply_node;
    std::size_t demand_node;
    std::int64_t flow;
    double cost;
  };
  std::vector<ArcFlow> positive_flows() const;

  std::size_t arc_count() const { return src_.size() - nodes_; }

 private:
  enum : int { kUp = 1, kDown = -1 };

  std::size_t find_entering(double& reduced);
  void pivot(std::size_t in_arc);
  void detach_child(std::size_t v);
  void attach_child(std::size_t parent, std::size_t v);
  void shift_subtree(std::size_t top, double sigma);
  void recompute_sizes();

  std::size_t n_supply_;
  std::size_t n_demand_;
  std::size_t nodes_;  // real nodes; the root has index nodes_
  std::size_t root_;
  double big_cost_;
  double tolerance_;

  // Arcs 0..nodes_-1 are the artificial arcs of node i; real arcs follow.
  std::vector<std::size_t> src_;
  std::vector<std::size_t> tgt_;
  std::vector<double> cost_;
  std::vector<std::int64_t> flow_;

  std::vector<double> pi_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> pred_;
  std::vector<int> dir_;
  std::vector<std::size_t> size_;  // subtree sizes
  std::vector<std::size_t> first_child_;
  std::vector<std::size_t> next_sib_;
  std::vector<std::size_t> prev_sib_;

  std::size_t next_arc_ = 0;
  std::vector<std::size_t> stack_;
  std::vector<std::size_t> path_;
  std::vector<std::size_t> path_pred_;
  std::vector<int> path_dir_;
};

}  // namespace nlmc::detail
