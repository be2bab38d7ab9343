#include "symlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "symlab/errors.hpp"

namespace symlab {

namespace {

// Primal network simplex on the complete bipartite graph sources -> sinks,
// with one artificial arc per node to a root. The spanning tree is stored
// LEMON-style (parent / pred / thread / rev_thread / succ_num / last_succ).
// All arcs are uncapacitated, so a non-tree arc always sits at its lower
// bound and only tree arcs carry flow; flows are therefore kept per node
// (the flow on the node's pred arc).
class NetworkSimplex {
 public:
  NetworkSimplex(std::span<const double> supply, std::span<const double> demand,
                 const Matrix& cost)
      : n1_(static_cast<int>(supply.size())),
        n2_(static_cast<int>(demand.size())),
        node_num_(n1_ + n2_),
        root_(node_num_),
        arc_num_(static_cast<std::int64_t>(n1_) * n2_),
        cost_(cost) {
    const int total = node_num_ + 1;
    supply_.assign(total, 0.0);
    for (int i = 0; i < n1_; ++i) supply_[i] = supply[i];
    for (int j = 0; j < n2_; ++j) supply_[n1_ + j] = -demand[j];

    double max_cost = 0.0;
    for (Eigen::Index k = 0; k < cost.size(); ++k) max_cost = std::max(max_cost, std::abs(cost.data()[k]));
    art_cost_ = (max_cost + 1.0) * (node_num_ + 1);
    eps_ = 64.0 * std::numeric_limits<double>::epsilon() * art_cost_;

    parent_.assign(total, -1);
    pred_.assign(total, -1);
    thread_.assign(total, 0);
    rev_thread_.assign(total, 0);
    succ_num_.assign(total, 0);
    last_succ_.assign(total, 0);
    pred_dir_.assign(total, 0);
    pi_.assign(total, 0.0);
    flow_.assign(total, 0.0);
    state_.assign(static_cast<std::size_t>(arc_num_), kStateLower);

    block_size_ = std::max<std::int64_t>(
        10, static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(arc_num_)))));
  }

  TransportResult run() {
    init_tree();
    TransportResult result;
    const long long max_pivots = 50LL * (arc_num_ + node_num_) + 1000;
    while (find_entering_arc()) {
      find_join_node();
      find_leaving_arc();
      change_flow();
      update_tree_structure();
      update_potential();
      if (++result.pivots > max_pivots) {
        throw std::runtime_error("network simplex exceeded pivot limit (cycling?)");
      }
    }
    for (int u = 0; u < node_num_; ++u) {
      const std::int64_t e = pred_[u];
      if (e < arc_num_ && flow_[u] > 0.0) {
        const int i = source(e), j = target(e) - n1_;
        result.plan.push_back({i, j, flow_[u]});
        result.cost += flow_[u] * cost_(i, j);
      }
    }
    std::sort(result.plan.begin(), result.plan.end(), [](const auto& a, const auto& b) {
      return a.source != b.source ? a.source < b.source : a.sink < b.sink;
    });
    return result;
  }

 private:
  static constexpr std::int8_t kStateTree = 0;
  static constexpr std::int8_t kStateLower = 1;
  static constexpr int kDirUp = 1;     // pred arc goes node -> parent
  static constexpr int kDirDown = -1;  // pred arc goes parent -> node

  int source(std::int64_t e) const {
    if (e < arc_num_) return static_cast<int>(e / n2_);
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0.0 ? u : root_;
  }
  int target(std::int64_t e) const {
    if (e < arc_num_) return n1_ + static_cast<int>(e % n2_);
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0.0 ? root_ : u;
  }
  double arc_cost(std::int64_t e) const {
    if (e < arc_num_) return cost_.data()[e];
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0.0 ? 0.0 : art_cost_;
  }

  void init_tree() {
    double sum = 0.0;
    for (int u = 0; u < node_num_; ++u) sum += supply_[u];
    supply_[root_] = -sum;
    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = node_num_ + 1;
    last_succ_[root_] = root_ - 1;
    pi_[root_] = 0.0;
    for (int u = 0; u < node_num_; ++u) {
      parent_[u] = root_;
      pred_[u] = arc_num_ + u;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      if (supply_[u] >= 0.0) {
        pred_dir_[u] = kDirUp;
        pi_[u] = 0.0;
        flow_[u] = supply_[u];
      } else {
        pred_dir_[u] = kDirDown;
        pi_[u] = art_cost_;
        flow_[u] = -supply_[u];
      }
    }
  }

  double reduced(std::int64_t e) const {
    const int i = static_cast<int>(e / n2_);
    const int j = n1_ + static_cast<int>(e % n2_);
    return cost_.data()[e] + pi_[i] - pi_[j];
  }

  bool find_entering_arc() {
    double best = 0.0;
    std::int64_t cnt = block_size_;
    std::int64_t e = next_arc_;
    in_arc_ = -1;
    for (; e < arc_num_; ++e) {
      if (state_[e] == kStateLower) {
        const double c = reduced(e);
        if (c < best) {
          best = c;
          in_arc_ = e;
        }
      }
      if (--cnt == 0) {
        if (best < -eps_) {
          next_arc_ = e;
          return true;
        }
        cnt = block_size_;
      }
    }
    for (e = 0; e < next_arc_; ++e) {
      if (state_[e] == kStateLower) {
        const double c = reduced(e);
        if (c < best) {
          best = c;
          in_arc_ = e;
        }
      }
      if (--cnt == 0) {
        if (best < -eps_) {
          next_arc_ = e;
          return true;
        }
        cnt = block_size_;
      }
    }
    if (best >= -eps_) return false;
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = source(in_arc_), v = target(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  void find_leaving_arc() {
    // Entering arcs are always at their lower bound: flow increases along
    // source -> target, so the cycle runs down from join to `first` and up
    // from `second` to join.
    const int first = source(in_arc_);
    const int second = target(in_arc_);
    delta_ = std::numeric_limits<double>::infinity();
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      if (pred_dir_[u] == kDirUp && flow_[u] < delta_) {
        delta_ = flow_[u];
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      if (pred_dir_[u] == kDirDown && flow_[u] <= delta_) {
        delta_ = flow_[u];
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw std::runtime_error("network simplex: unbounded cycle");
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
  }

  void change_flow() {
    if (delta_ > 0.0) {
      for (int u = source(in_arc_); u != join_; u = parent_[u]) flow_[u] -= pred_dir_[u] * delta_;
      for (int u = target(in_arc_); u != join_; u = parent_[u]) flow_[u] += pred_dir_[u] * delta_;
    }
    flow_[u_out_] = 0.0;
    in_flow_ = delta_;
    state_[in_arc_] = kStateTree;
    const std::int64_t out_arc = pred_[u_out_];
    if (out_arc < arc_num_) state_[out_arc] = kStateLower;
  }

  void update_tree_structure() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kDirUp : kDirDown;
      flow_[u_in_] = in_flow_;

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

      // Re-hang the stem u_in ... u_out under v_in, reversing parent links.
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

      // Shift pred arcs (and their flows) down the reversed stem.
      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        flow_[u] = flow_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source(in_arc_) ? kDirUp : kDirDown;
      flow_[u_in_] = in_flow_;
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

  void update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  const int n1_, n2_, node_num_, root_;
  const std::int64_t arc_num_;
  const Matrix& cost_;
  double art_cost_ = 0.0;
  double eps_ = 0.0;

  std::vector<double> supply_;
  std::vector<int> parent_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<std::int64_t> pred_;
  std::vector<int> pred_dir_;
  std::vector<double> pi_, flow_;
  std::vector<std::int8_t> state_;
  std::vector<int> dirty_revs_;

  std::int64_t block_size_ = 10;
  std::int64_t next_arc_ = 0;
  std::int64_t in_arc_ = -1;
  int join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0, in_flow_ = 0.0;
};

}  // namespace

TransportResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                                const Matrix& cost) {
  if (cost.rows() != static_cast<Eigen::Index>(supply.size()) ||
      cost.cols() != static_cast<Eigen::Index>(demand.size())) {
    throw StructuralError("transport: cost matrix shape does not match marginals");
  }
  const double sum_s = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double sum_d = std::accumulate(demand.begin(), demand.end(), 0.0);
  for (double v : supply) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidMeasureError("transport: negative supply");
  }
  for (double v : demand) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidMeasureError("transport: negative demand");
  }
  if (std::abs(sum_s - sum_d) > 1e-9) {
    throw InvalidMeasureError("transport: marginal totals differ by " +
                              std::to_string(std::abs(sum_s - sum_d)));
  }

  // Drop empty atoms; they cannot carry mass.
  std::vector<int> rows, cols;
  for (int i = 0; i < static_cast<int>(supply.size()); ++i) {
    if (supply[i] > 0.0) rows.push_back(i);
  }
  for (int j = 0; j < static_cast<int>(demand.size()); ++j) {
    if (demand[j] > 0.0) cols.push_back(j);
  }
  TransportResult result;
  if (rows.empty() || cols.empty()) return result;

  std::vector<double> s(rows.size()), d(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) s[i] = supply[rows[i]];
  const double rescale = sum_s / sum_d;
  for (std::size_t j = 0; j < cols.size(); ++j) d[j] = demand[cols[j]] * rescale;
  Matrix sub(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = cost(rows[i], cols[j]);
  }

  NetworkSimplex solver(s, d, sub);
  result = solver.run();
  for (auto& arc : result.plan) {
    arc.source = rows[arc.source];
    arc.sink = cols[arc.sink];
  }
  return result;
}

}  // namespace symlab
