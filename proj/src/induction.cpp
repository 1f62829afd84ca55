#include "probirm/induction.hpp"

#include "probirm/error.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <climits>
#include <cmath>
#include <map>

namespace probirm {

bool covers(const RewardMachine& rm, const WeightedExample& ex) {
  const StateId last = final_state(rm, ex.body);
  switch (ex.outcome) {
    case TraceOutcome::Goal:
      return last == rm.accepting();
    case TraceOutcome::DeadEnd:
      return last == rm.rejecting();
    case TraceOutcome::Incomplete:
      return !rm.is_sink(last);
  }
  return false;
}

ScoredHypothesis score(const RewardMachine& rm, const std::vector<WeightedExample>& examples, LengthCost cost) {
  ScoredHypothesis h;
  h.machine = rm;
  h.length = machine_length(rm, cost);
  for (const auto& ex : examples) {
    if (!covers(rm, ex)) h.penalty += ex.penalty;
  }
  h.score = h.length + h.penalty;
  return h;
}

ScoredHypothesis score(const RewardMachine& rm, const InductionTask& task) {
  return score(rm, task.examples, task.length_cost);
}

namespace {

constexpr int kAccept = -1;
constexpr int kReject = -2;
constexpr int kUnset = -3;
constexpr double kTolerance = 1e-9;
// Stand-in for infinite penalties inside the search so that frontier sums can
// be updated by subtraction.
constexpr double kHardWeight = 1e7;

constexpr std::size_t kGoal = static_cast<std::size_t>(TraceOutcome::Goal);
constexpr std::size_t kDead = static_cast<std::size_t>(TraceOutcome::DeadEnd);
constexpr std::size_t kInc = static_cast<std::size_t>(TraceOutcome::Incomplete);

double search_penalty(double p) { return std::isfinite(p) ? p : kHardWeight; }

/// Prefix tree of example bodies with per-class penalty mass.
struct Trie {
  struct Node {
    int label = -1;  // dense index of the label on the incoming edge
    std::vector<int> children;
    std::array<double, kOutcomeCount> end{};  // examples ending here
    std::array<double, kOutcomeCount> sub{};  // examples ending in the subtree
    double best = 0.0;  // least subtree penalty over any class assignment
    double kids = 0.0;  // sum of best over children
  };
  std::vector<Node> nodes;
  std::vector<Label> labels;

  explicit Trie(const std::vector<WeightedExample>& examples) {
    std::map<Label, int> index;
    for (const auto& ex : examples) {
      for (Label l : ex.body) index.emplace(l, 0);
    }
    for (auto& [l, i] : index) {
      i = static_cast<int>(labels.size());
      labels.push_back(l);
    }
    nodes.emplace_back();
    for (const auto& ex : examples) {
      int cur = 0;
      for (Label l : ex.body) {
        const int li = index.at(l);
        int next = -1;
        for (int c : nodes[static_cast<std::size_t>(cur)].children) {
          if (nodes[static_cast<std::size_t>(c)].label == li) {
            next = c;
            break;
          }
        }
        if (next < 0) {
          next = static_cast<int>(nodes.size());
          nodes[static_cast<std::size_t>(cur)].children.push_back(next);
          nodes.emplace_back();
          nodes.back().label = li;
        }
        cur = next;
      }
      nodes[static_cast<std::size_t>(cur)].end[static_cast<std::size_t>(ex.outcome)] += search_penalty(ex.penalty);
    }
    for (auto& n : nodes) {
      std::sort(n.children.begin(), n.children.end(),
                [&](int a, int b) { return nodes[static_cast<std::size_t>(a)].label < nodes[static_cast<std::size_t>(b)].label; });
    }
    // Children always have larger indices than their parent.
    for (std::size_t i = nodes.size(); i-- > 0;) {
      Node& n = nodes[i];
      n.sub = n.end;
      n.kids = 0.0;
      for (int c : n.children) {
        const Node& child = nodes[static_cast<std::size_t>(c)];
        for (std::size_t k = 0; k < kOutcomeCount; ++k) n.sub[k] += child.sub[k];
        n.kids += child.best;
      }
      const double as_accept = n.sub[kDead] + n.sub[kInc];
      const double as_reject = n.sub[kGoal] + n.sub[kInc];
      const double as_open = n.end[kGoal] + n.end[kDead] + n.kids;
      n.best = std::min({as_accept, as_reject, as_open});
    }
  }

  const Node& at(int i) const { return nodes[static_cast<std::size_t>(i)]; }
};

/// Branch and bound over the successor function restricted to the (state,
/// label) pairs the examples reach. The bound is the synthesised length of
/// the assigned transitions plus a relaxation of the penalty in which every
/// unassigned transition may be chosen independently at each trie node.
class Searcher {
 public:
  Searcher(const InductionTask& task, const Trie& trie)
      : task_(task),
        trie_(trie),
        synth_(task.length_cost, task.guard_space),
        n_labels_(static_cast<int>(trie.labels.size())),
        max_states_(task.max_intermediate_states + 1),
        delta_(static_cast<std::size_t>(max_states_ * n_labels_), kUnset) {
    node_budget_ = task.node_budget;
    if (task.budget_seconds > 0.0) {
      deadline_ = std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(task.budget_seconds));
      has_deadline_ = true;
    }
    const auto& root = trie_.at(0);
    incumbent_ = root.sub[kGoal] + root.sub[kDead];  // the loop machine
    best_delta_ = delta_;
  }

  void run() {
    for (int k = 0; k <= task_.max_intermediate_states && !timed_out_; ++k) {
      k_ = k;
      width_ = static_cast<std::size_t>(k + 3);
      g_.assign(trie_.nodes.size() * width_, 0.0);
      gmin_.assign(trie_.nodes.size(), 0.0);
      used_ = 0;
      std::fill(delta_.begin(), delta_.end(), kUnset);
      cons_.assign(static_cast<std::size_t>(max_states_), {});
      cost_.assign(static_cast<std::size_t>(max_states_), 0);
      length_ = 0;
      search();
    }
  }

  RewardMachine machine() {
    const int n = best_used_ + 3;
    const StateId accept = best_used_ + 1;
    const StateId reject = best_used_ + 2;
    RewardMachine rm(n, 0, accept, reject);
    for (int u = 0; u <= best_used_; ++u) {
      std::vector<LabelClass> cons;
      for (int l = 0; l < n_labels_; ++l) {
        const int t = best_delta_[index(u, l)];
        if (t != kUnset) cons.push_back(LabelClass{trie_.labels[static_cast<std::size_t>(l)], class_of(u, t)});
      }
      auto guards = synth_.solve(cons);
      std::sort(guards.begin(), guards.end(), [](const GuardChoice& a, const GuardChoice& b) {
        return a.cls != b.cls ? a.cls < b.cls : a.guard < b.guard;
      });
      for (const auto& g : guards) {
        const int t = target_of(g.cls);
        const StateId to = t == kAccept ? accept : t == kReject ? reject : t;
        rm.add_edge(u, to, g.guard, to == accept ? 1.0 : 0.0);
      }
    }
    return rm;
  }

  double incumbent() const { return incumbent_; }
  bool timed_out() const { return timed_out_; }
  std::size_t nodes() const { return nodes_; }

 private:
  std::size_t index(int u, int l) const { return static_cast<std::size_t>(u * n_labels_ + l); }

  // Guard classes: 0 self-loop, 1 reject, 2 accept, v + 3 for state v.
  static int class_of(int u, int t) {
    if (t == u) return 0;
    if (t == kReject) return 1;
    if (t == kAccept) return 2;
    return t + 3;
  }
  static int target_of(int cls) {
    if (cls == 1) return kReject;
    if (cls == 2) return kAccept;
    return cls - 3;
  }

  // Column of a target in the DP table: states 0..k, then accept, reject.
  std::size_t column(int t) const {
    if (t == kAccept) return static_cast<std::size_t>(k_ + 1);
    if (t == kReject) return static_cast<std::size_t>(k_ + 2);
    return static_cast<std::size_t>(t);
  }
  double& g(int n, std::size_t col) { return g_[static_cast<std::size_t>(n) * width_ + col]; }

  int synth_limit() const {
    return incumbent_ >= static_cast<double>(INT_MAX / 2) ? INT_MAX / 2 : static_cast<int>(std::floor(incumbent_));
  }

  bool out_of_time() {
    if (timed_out_) return true;
    ++nodes_;
    if (node_budget_ > 0 && nodes_ > node_budget_) timed_out_ = true;
    if (has_deadline_ && (nodes_ & 255u) == 0 && std::chrono::steady_clock::now() > deadline_) {
      timed_out_ = true;
    }
    return timed_out_;
  }

  /// g(n, s): least penalty of the examples ending in n's subtree given that
  /// n is entered in state s. Children are visited after their parent, so a
  /// reverse sweep sees every child first.
  void relax() {
    const auto accept = column(kAccept);
    const auto reject = column(kReject);
    for (std::size_t i = trie_.nodes.size(); i-- > 0;) {
      const int n = static_cast<int>(i);
      const auto& node = trie_.at(n);
      g(n, accept) = node.sub[kDead] + node.sub[kInc];
      g(n, reject) = node.sub[kGoal] + node.sub[kInc];
      double lo = std::min(g(n, accept), g(n, reject));
      for (int s = 0; s <= k_; ++s) {
        double v = node.end[kGoal] + node.end[kDead];
        for (int c : node.children) {
          const int t = s <= used_ ? delta_[index(s, trie_.at(c).label)] : kUnset;
          v += t == kUnset ? gmin_[static_cast<std::size_t>(c)] : g(c, column(t));
        }
        g(n, static_cast<std::size_t>(s)) = v;
        lo = std::min(lo, v);
      }
      gmin_[i] = lo;
    }
  }

  struct Hit {
    int state;
    int label;
    int child;
  };

  /// Trie children reached under the current assignment whose transition is
  /// still open, in breadth-first order.
  void frontier(std::vector<Hit>& hits) {
    hits.clear();
    queue_.assign(1, std::pair<int, int>{0, 0});
    for (std::size_t q = 0; q < queue_.size(); ++q) {
      const auto [n, s] = queue_[q];
      for (int c : trie_.at(n).children) {
        const int l = trie_.at(c).label;
        const int t = delta_[index(s, l)];
        if (t == kUnset) {
          hits.push_back(Hit{s, l, c});
        } else if (t >= 0) {
          queue_.emplace_back(c, t);
        }
      }
    }
  }

  struct Candidate {
    int target;
    int cost;
    double bound;
  };

  void search() {
    if (out_of_time()) return;
    relax();
    const double base = length_ + g(0, 0);
    if (base >= incumbent_ - kTolerance) return;

    std::vector<Hit> hits;
    frontier(hits);
    if (hits.empty()) {
      incumbent_ = base;
      best_delta_ = delta_;
      best_used_ = used_;
      return;
    }

    // Branch on the open pair carrying the most example mass.
    std::vector<double> mass(static_cast<std::size_t>((k_ + 1) * n_labels_), 0.0);
    int u = -1;
    int l = -1;
    for (const auto& h : hits) {
      const auto& sub = trie_.at(h.child).sub;
      double& m = mass[index(h.state, h.label)];
      m += sub[kGoal] + sub[kDead] + sub[kInc];
      if (u < 0 || m > mass[index(u, l)]) {
        u = h.state;
        l = h.label;
      }
    }

    std::vector<int> targets;
    for (int v = 0; v <= used_; ++v) targets.push_back(v);
    if (used_ < k_) targets.push_back(used_ + 1);
    targets.push_back(kAccept);
    targets.push_back(kReject);

    const int limit = synth_limit();
    auto& cons = cons_[static_cast<std::size_t>(u)];
    std::vector<Candidate> cands;
    for (int t : targets) {
      cons.push_back(LabelClass{trie_.labels[static_cast<std::size_t>(l)], class_of(u, t)});
      const int cost = synth_.cost(cons, limit);
      cons.pop_back();
      double b = base - cost_[static_cast<std::size_t>(u)] + cost;
      for (const auto& h : hits) {
        if (h.state == u && h.label == l) b += g(h.child, column(t)) - gmin_[static_cast<std::size_t>(h.child)];
      }
      if (b < incumbent_ - kTolerance) cands.push_back(Candidate{t, cost, b});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.bound < b.bound; });

    for (const auto& cand : cands) {
      if (cand.bound >= incumbent_ - kTolerance || timed_out_) break;
      const int saved_used = used_;
      const int saved_cost = cost_[static_cast<std::size_t>(u)];
      delta_[index(u, l)] = cand.target;
      cons.push_back(LabelClass{trie_.labels[static_cast<std::size_t>(l)], class_of(u, cand.target)});
      length_ += cand.cost - saved_cost;
      cost_[static_cast<std::size_t>(u)] = cand.cost;
      if (cand.target == used_ + 1) used_ = cand.target;

      search();

      used_ = saved_used;
      length_ += saved_cost - cand.cost;
      cost_[static_cast<std::size_t>(u)] = saved_cost;
      cons.pop_back();
      delta_[index(u, l)] = kUnset;
    }
  }

  const InductionTask& task_;
  const Trie& trie_;
  GuardSynthesizer synth_;
  int n_labels_;
  int max_states_;
  int k_ = 0;
  int used_ = 0;
  std::size_t width_ = 3;
  std::vector<int> delta_;
  std::vector<std::vector<LabelClass>> cons_;
  std::vector<int> cost_;
  int length_ = 0;
  std::vector<double> g_;
  std::vector<double> gmin_;
  std::vector<std::pair<int, int>> queue_;

  double incumbent_ = 0.0;
  std::vector<int> best_delta_;
  int best_used_ = 0;

  bool has_deadline_ = false;
  std::chrono::steady_clock::time_point deadline_;
  bool timed_out_ = false;
  std::size_t node_budget_ = 0;
  std::size_t nodes_ = 0;
};

}  // namespace

ScoredHypothesis induce(const InductionTask& task) {
  if (task.alphabet.size() == 0) throw ContractViolation("induction needs a non-empty alphabet");
  if (task.max_intermediate_states < 0) throw ContractViolation("max_intermediate_states must be >= 0");
  const Trie trie(task.examples);
  Searcher searcher(task, trie);
  searcher.run();

  ScoredHypothesis h = score(searcher.machine(), task);
  h.suboptimal = searcher.timed_out();
  h.nodes = searcher.nodes();
  if (std::isfinite(h.score) && std::abs(h.score - searcher.incumbent()) > 1e-6 * std::max(1.0, h.score)) {
    throw ContractViolation("induced machine does not reproduce its search score");
  }
  return h;
}

}  // namespace probirm
