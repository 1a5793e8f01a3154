#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nsl::detail {

namespace {
constexpr std::int8_t state_upper = -1;
constexpr std::int8_t state_tree = 0;
constexpr std::int8_t state_lower = 1;
constexpr std::int64_t inf_flow = std::numeric_limits<std::int64_t>::max();
}  // namespace

TransportSimplex::TransportSimplex(std::vector<Point2> sources, std::vector<std::int64_t> supply,
                                   std::vector<Point2> sinks, std::vector<std::int64_t> demand)
    : src_(std::move(sources)), snk_(std::move(sinks)) {
  if (src_.size() != supply.size() || snk_.size() != demand.size()) {
    throw std::invalid_argument("TransportSimplex: size mismatch");
  }
  if (src_.empty() || snk_.empty()) throw std::invalid_argument("TransportSimplex: empty side");
  const std::int64_t s = std::accumulate(supply.begin(), supply.end(), std::int64_t{0});
  const std::int64_t d = std::accumulate(demand.begin(), demand.end(), std::int64_t{0});
  if (s != d) throw std::invalid_argument("TransportSimplex: supply and demand differ");
  ns_ = src_.size();
  nt_ = snk_.size();
  node_num_ = ns_ + nt_;
  arc_num_ = ns_ * nt_;
  root_ = static_cast<int>(node_num_);
  supply_.resize(node_num_ + 1);
  for (std::size_t i = 0; i < ns_; ++i) supply_[i] = supply[i];
  for (std::size_t j = 0; j < nt_; ++j) supply_[ns_ + j] = -demand[j];
  supply_[node_num_] = 0;
  init();
}

void TransportSimplex::init() {
  double max_cost = 0.0;
  for (std::size_t i = 0; i < ns_; ++i) {
    for (std::size_t j = 0; j < nt_; ++j) max_cost = std::max(max_cost, real_cost(i, j));
  }
  const double art_cost = (max_cost + 1.0) * static_cast<double>(node_num_);
  eps_ = 1e-12 * art_cost;

  flow_.assign(arc_num_, 0);
  state_.assign(arc_num_, state_lower);
  art_source_.resize(node_num_);
  art_target_.resize(node_num_);
  art_cost_.resize(node_num_);
  art_flow_.resize(node_num_);
  art_state_.assign(node_num_, state_tree);

  const std::size_t n = node_num_ + 1;
  parent_.assign(n, 0);
  pred_.assign(n, 0);
  thread_.assign(n, 0);
  rev_thread_.assign(n, 0);
  succ_num_.assign(n, 0);
  last_succ_.assign(n, 0);
  pred_dir_.assign(n, 0);
  pi_.assign(n, 0.0);

  parent_[root_] = -1;
  pred_[root_] = -1;
  thread_[root_] = 0;
  rev_thread_[0] = root_;
  succ_num_[root_] = static_cast<int>(node_num_) + 1;
  last_succ_[root_] = root_ - 1;
  pi_[root_] = 0.0;

  for (std::size_t u = 0; u < node_num_; ++u) {
    const int ui = static_cast<int>(u);
    parent_[u] = root_;
    pred_[u] = static_cast<int>(arc_num_ + u);
    thread_[u] = ui + 1;
    rev_thread_[u + 1] = ui;
    succ_num_[u] = 1;
    last_succ_[u] = ui;
    if (supply_[u] >= 0) {
      pred_dir_[u] = up;
      pi_[u] = 0.0;
      art_source_[u] = ui;
      art_target_[u] = root_;
      art_flow_[u] = supply_[u];
      art_cost_[u] = 0.0;
    } else {
      pred_dir_[u] = down;
      pi_[u] = art_cost;
      art_source_[u] = root_;
      art_target_[u] = ui;
      art_flow_[u] = -supply_[u];
      art_cost_[u] = art_cost;
    }
  }

  block_size_ = std::max<std::size_t>(
      10, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(arc_num_)))));
  next_arc_ = 0;
}

bool TransportSimplex::find_entering_arc() {
  double min = -eps_;
  bool found = false;
  std::size_t cnt = block_size_;
  std::size_t e = next_arc_;
  std::size_t i = e / nt_;
  std::size_t j = e % nt_;
  for (std::size_t scanned = 0; scanned < arc_num_; ++scanned) {
    if (state_[e] != state_tree) {
      const double c =
          state_[e] * (real_cost(i, j) + pi_[i] - pi_[ns_ + j]);
      if (c < min) {
        min = c;
        in_arc_ = e;
        found = true;
      }
    }
    ++e;
    if (++j == nt_) {
      j = 0;
      if (++i == ns_) {
        i = 0;
        e = 0;
      }
    }
    if (--cnt == 0) {
      if (found) break;
      cnt = block_size_;
    }
  }
  if (!found) return false;
  next_arc_ = e;
  return true;
}

void TransportSimplex::find_join_node() {
  int u = arc_source(in_arc_);
  int v = arc_target(in_arc_);
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool TransportSimplex::find_leaving_arc() {
  int first, second;
  if (state(in_arc_) == state_lower) {
    first = arc_source(in_arc_);
    second = arc_target(in_arc_);
  } else {
    first = arc_target(in_arc_);
    second = arc_source(in_arc_);
  }
  delta_ = inf_flow;
  int result = 0;
  for (int u = first; u != join_; u = parent_[u]) {
    const std::size_t e = static_cast<std::size_t>(pred_[u]);
    const std::int64_t d = pred_dir_[u] == down ? inf_flow : flow(e);
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    const std::size_t e = static_cast<std::size_t>(pred_[u]);
    const std::int64_t d = pred_dir_[u] == up ? inf_flow : flow(e);
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }
  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void TransportSimplex::change_flow(bool change) {
  if (delta_ > 0) {
    const std::int64_t val = state(in_arc_) * delta_;
    flow(in_arc_) += val;
    for (int u = arc_source(in_arc_); u != join_; u = parent_[u]) {
      flow(static_cast<std::size_t>(pred_[u])) -= pred_dir_[u] * val;
    }
    for (int u = arc_target(in_arc_); u != join_; u = parent_[u]) {
      flow(static_cast<std::size_t>(pred_[u])) += pred_dir_[u] * val;
    }
  }
  if (change) {
    state(in_arc_) = state_tree;
    const std::size_t out = static_cast<std::size_t>(pred_[u_out_]);
    state(out) = flow(out) == 0 ? state_lower : state_upper;
  } else {
    state(in_arc_) = static_cast<std::int8_t>(-state(in_arc_));
  }
}

void TransportSimplex::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];
  const int in_arc = static_cast<int>(in_arc_);

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc;
    pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? up : down;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before, after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = -pred_dir_[p];
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc;
    pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? up : down;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void TransportSimplex::update_potential() {
  const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

bool TransportSimplex::run() {
  while (find_entering_arc()) {
    find_join_node();
    const bool change = find_leaving_arc();
    if (delta_ == inf_flow) return false;
    change_flow(change);
    if (change) {
      update_tree_structure();
      update_potential();
    }
    ++pivots_;
  }
  for (std::int64_t f : art_flow_) {
    if (f != 0) return false;
  }
  return true;
}

double TransportSimplex::total_cost() const {
  double c = 0.0;
  for (const Flow& f : flows()) c += static_cast<double>(f.amount) * real_cost(f.source, f.sink);
  return c;
}

std::vector<TransportSimplex::Flow> TransportSimplex::flows() const {
  // Non-tree arcs sit at their lower bound, so every positive flow is a tree arc.
  std::vector<Flow> out;
  for (std::size_t u = 0; u < node_num_; ++u) {
    const std::size_t e = static_cast<std::size_t>(pred_[u]);
    if (e < arc_num_ && flow_[e] > 0) out.push_back({e / nt_, e % nt_, flow_[e]});
  }
  return out;
}

}  // namespace nsl::detail
