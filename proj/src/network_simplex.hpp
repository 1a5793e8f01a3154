#pragma once

#include <cstdint>
#include <vector>

#include "nsl/estimation.hpp"

namespace nsl::detail {

/// Primal network simplex for the uncapacitated transportation problem
/// between two weighted point sets, with squared-Euclidean arc costs computed
/// on the fly. Block-search pivoting on a strongly feasible spanning tree,
/// following the structure of the LEMON implementation.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<Point2> sources, std::vector<std::int64_t> supply,
                   std::vector<Point2> sinks, std::vector<std::int64_t> demand);

  /// Returns false if the problem turned out unbounded or infeasible.
  bool run();

  /// Sum of flow * cost in integer flow units.
  double total_cost() const;
  std::size_t pivots() const { return pivots_; }

  struct Flow {
    std::size_t source;
    std::size_t sink;
    std::int64_t amount;
  };
  std::vector<Flow> flows() const;

 private:
  enum : int { up = 1, down = -1 };

  double real_cost(std::size_t i, std::size_t j) const {
    const double dx = src_[i][0] - snk_[j][0];
    const double dy = src_[i][1] - snk_[j][1];
    return dx * dx + dy * dy;
  }
  int arc_source(std::size_t e) const {
    return e < arc_num_ ? static_cast<int>(e / nt_) : art_source_[e - arc_num_];
  }
  int arc_target(std::size_t e) const {
    return e < arc_num_ ? static_cast<int>(ns_ + e % nt_) : art_target_[e - arc_num_];
  }
  double arc_cost(std::size_t e) const {
    return e < arc_num_ ? real_cost(e / nt_, e % nt_) : art_cost_[e - arc_num_];
  }
  std::int64_t& flow(std::size_t e) {
    return e < arc_num_ ? flow_[e] : art_flow_[e - arc_num_];
  }
  std::int8_t& state(std::size_t e) {
    return e < arc_num_ ? state_[e] : art_state_[e - arc_num_];
  }

  void init();
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow(bool change);
  void update_tree_structure();
  void update_potential();

  std::vector<Point2> src_, snk_;
  std::size_t ns_, nt_, node_num_, arc_num_;
  int root_;

  std::vector<std::int64_t> supply_;
  std::vector<std::int64_t> flow_;
  std::vector<std::int8_t> state_;
  std::vector<int> art_source_, art_target_;
  std::vector<double> art_cost_;
  std::vector<std::int64_t> art_flow_;
  std::vector<std::int8_t> art_state_;

  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, dirty_revs_;
  std::vector<int> pred_dir_;
  std::vector<double> pi_;

  double eps_ = 0.0;
  std::size_t block_size_ = 0;
  std::size_t next_arc_ = 0;
  std::size_t pivots_ = 0;

  std::size_t in_arc_ = 0;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  std::int64_t delta_ = 0;
};

}  // namespace nsl::detail
