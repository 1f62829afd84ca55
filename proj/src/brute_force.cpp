#include "probirm/error.hpp"
#include "probirm/induction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace probirm {

namespace {

constexpr std::size_t kMaxProps = 3;
constexpr int kMaxIntermediate = 2;
constexpr int kMaxGuards = 30;
constexpr std::size_t kMaxLabels = std::size_t{1} << kMaxProps;

constexpr int kAccept = -1;
constexpr int kReject = -2;
constexpr int kUnset = -3;

/// Every set of pairwise exclusive guards over the alphabet, with the guard
/// each label satisfies.
struct FamilyTable {
  struct Family {
    std::vector<Guard> guards;
    int cost = 0;
    std::array<int, kMaxLabels> match{};
  };
  std::vector<Family> families;

  FamilyTable(std::size_t n_props, LengthCost length_cost) {
    std::vector<Guard> all;
    int count = 1;
    for (std::size_t i = 0; i < n_props; ++i) count *= 3;
    for (int code = 0; code < count; ++code) {
      Guard g;
      int rest = code;
      for (std::size_t p = 0; p < n_props; ++p, rest /= 3) {
        if (rest % 3 == 1) g.positive.insert(static_cast<PropId>(p));
        if (rest % 3 == 2) g.negative.insert(static_cast<PropId>(p));
      }
      all.push_back(g);
    }
    std::vector<Guard> current;
    enumerate(all, 0, current, n_props, length_cost);
  }

 private:
  void enumerate(const std::vector<Guard>& all, std::size_t from, std::vector<Guard>& current, std::size_t n_props,
                 LengthCost length_cost) {
    Family f;
    f.guards = current;
    for (const auto& g : current) f.cost += guard_cost(g, length_cost);
    for (std::size_t l = 0; l < kMaxLabels; ++l) {
      f.match[l] = -1;
      if (l >= (std::size_t{1} << n_props)) continue;
      for (std::size_t j = 0; j < current.size(); ++j) {
        if (satisfies(Label(static_cast<std::uint16_t>(l)), current[j])) f.match[l] = static_cast<int>(j);
      }
    }
    families.push_back(std::move(f));
    for (std::size_t i = from; i < all.size(); ++i) {
      bool ok = true;
      for (const auto& g : current) ok = ok && mutually_exclusive(g, all[i]);
      if (!ok) continue;
      current.push_back(all[i]);
      enumerate(all, i + 1, current, n_props, length_cost);
      current.pop_back();
    }
  }
};

class Oracle {
 public:
  Oracle(const InductionTask& task)
      : task_(task), table_(task.alphabet.size(), task.length_cost), max_k_(task.max_intermediate_states) {
    for (auto& row : delta_) row.fill(kUnset);
    incumbent_ = score(RewardMachine::loop_machine(), task).score;
    best_delta_ = delta_;
  }

  /// Exhausts 0, 1, ... k intermediate states in turn; each pass starts from
  /// the best machine of the smaller ones, which only tightens pruning.
  void run() {
    for (k_ = 0; k_ <= max_k_; ++k_) {
      for (auto& row : delta_) row.fill(kUnset);
      cost_.fill(0.0);
      used_ = 0;
      start();
    }
  }

  RewardMachine machine() {
    const StateId accept = best_used_ + 1;
    const StateId reject = best_used_ + 2;
    RewardMachine rm(best_used_ + 3, 0, accept, reject);
    for (int u = 0; u <= best_used_; ++u) {
      const auto [cost, family] = state_cost(best_delta_[static_cast<std::size_t>(u)], u);
      (void)cost;
      const auto& f = table_.families[static_cast<std::size_t>(family)];
      for (std::size_t j = 0; j < f.guards.size(); ++j) {
        int t = kUnset;
        for (std::size_t l = 0; l < kMaxLabels; ++l) {
          if (f.match[l] == static_cast<int>(j) && best_delta_[static_cast<std::size_t>(u)][l] != kUnset) {
            t = best_delta_[static_cast<std::size_t>(u)][l];
          }
        }
        if (t == kUnset || t == u) continue;
        const StateId to = t == kAccept ? accept : t == kReject ? reject : t;
        rm.add_edge(u, to, f.guards[j], to == accept ? 1.0 : 0.0);
      }
    }
    return rm;
  }

  double incumbent() const { return incumbent_; }

 private:
  using Row = std::array<int, kMaxLabels>;

  std::pair<int, int> state_cost(const Row& row, int u) {
    // Canonical key: 4 bits per label, classes renumbered by first use.
    std::uint32_t key = 0;
    std::array<int, kMaxLabels> cls{};
    std::array<int, kMaxLabels> seen{};
    std::size_t n_seen = 0;
    for (std::size_t l = 0; l < kMaxLabels; ++l) {
      int c = 0;  // unconstrained
      if (row[l] == u) {
        c = 1;  // self-loop
      } else if (row[l] != kUnset) {
        std::size_t i = 0;
        while (i < n_seen && seen[i] != row[l]) ++i;
        if (i == n_seen) seen[n_seen++] = row[l];
        c = static_cast<int>(i) + 2;
      }
      cls[l] = c;
      key |= static_cast<std::uint32_t>(c) << (4 * l);
    }
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    std::pair<int, int> best{std::numeric_limits<int>::max(), -1};
    for (std::size_t fi = 0; fi < table_.families.size(); ++fi) {
      const auto& f = table_.families[fi];
      if (f.cost >= best.first) continue;
      std::vector<int> guard_cls(f.guards.size(), 0);
      bool ok = true;
      for (std::size_t l = 0; l < kMaxLabels && ok; ++l) {
        const int m = f.match[l];
        if (cls[l] == 0) continue;
        if (cls[l] == 1) {
          ok = m < 0;
        } else if (m < 0) {
          ok = false;
        } else if (guard_cls[static_cast<std::size_t>(m)] == 0) {
          guard_cls[static_cast<std::size_t>(m)] = cls[l];
        } else {
          ok = guard_cls[static_cast<std::size_t>(m)] == cls[l];
        }
      }
      if (ok) best = {f.cost, static_cast<int>(fi)};
    }
    memo_.emplace(key, best);
    return best;
  }

  /// Position of an example that stops at a still unset transition.
  struct Cursor {
    std::size_t example;
    int state;
    std::size_t pos;
  };

  bool satisfied(const WeightedExample& ex, int u) const {
    return ex.outcome == TraceOutcome::Goal      ? u == kAccept
           : ex.outcome == TraceOutcome::DeadEnd ? u == kReject
                                                 : (u != kAccept && u != kReject);
  }

  /// Replays from `c` until the example is decided (returns false and adds
  /// its penalty if violated) or blocks again (returns true).
  bool advance(Cursor& c, double& penalty) const {
    const auto& ex = task_.examples[c.example];
    while (c.state != kAccept && c.state != kReject && c.pos < ex.body.size()) {
      const int t = delta_[static_cast<std::size_t>(c.state)][ex.body[c.pos].bits()];
      if (t == kUnset) return true;
      c.state = t;
      ++c.pos;
    }
    if (!satisfied(ex, c.state)) penalty += ex.penalty;
    return false;
  }

  // Guard cost of each state's partial row; only the branched row changes.
  double length() const {
    double total = 0.0;
    for (int u = 0; u <= used_; ++u) total += cost_[static_cast<std::size_t>(u)];
    return total;
  }

  void start() {
    std::vector<Cursor> pending;
    double penalty = 0.0;
    for (std::size_t i = 0; i < task_.examples.size(); ++i) {
      Cursor c{i, 0, 0};
      if (advance(c, penalty)) pending.push_back(c);
    }
    recurse(pending, penalty);
  }

  void recurse(const std::vector<Cursor>& pending, double penalty) {
    const double bound = length() + penalty;
    if (bound >= incumbent_ - 1e-9) return;
    if (pending.empty()) {
      incumbent_ = bound;
      best_delta_ = delta_;
      best_used_ = used_;
      return;
    }
    // Branch on the transition blocking the first pending example.
    const Cursor& first = pending.front();
    const int bu = first.state;
    const int bl = task_.examples[first.example].body[first.pos].bits();
    auto& cell = delta_[static_cast<std::size_t>(bu)][static_cast<std::size_t>(bl)];
    auto& cost = cost_[static_cast<std::size_t>(bu)];
    const double saved_cost = cost;

    struct Child {
      int target;
      double cost;
      double bound;
      double penalty;
      std::vector<Cursor> pending;
    };
    std::vector<Child> children;
    std::vector<int> targets;
    for (int v = 0; v <= used_; ++v) targets.push_back(v);
    if (used_ < k_) targets.push_back(used_ + 1);
    targets.push_back(kAccept);
    targets.push_back(kReject);
    for (int t : targets) {
      const int saved_used = used_;
      if (t == used_ + 1) used_ = t;
      cell = t;
      cost = state_cost(delta_[static_cast<std::size_t>(bu)], bu).first;
      Child child{t, cost, length() + penalty, penalty, {}};
      if (child.bound < incumbent_ - 1e-9) child.pending.reserve(pending.size());
      for (Cursor c : pending) {
        if (child.bound >= incumbent_ - 1e-9) break;
        const auto& body = task_.examples[c.example].body;
        if (c.state == bu && static_cast<int>(body[c.pos].bits()) == bl) {
          if (advance(c, child.penalty)) child.pending.push_back(c);
          child.bound = length() + child.penalty;
        } else {
          child.pending.push_back(c);
        }
      }
      cell = kUnset;
      cost = saved_cost;
      used_ = saved_used;
      if (child.bound < incumbent_ - 1e-9) children.push_back(std::move(child));
    }
    std::stable_sort(children.begin(), children.end(),
                     [](const Child& a, const Child& b) { return a.bound < b.bound; });
    for (const Child& child : children) {
      const int saved_used = used_;
      if (child.target == used_ + 1) used_ = child.target;
      cell = child.target;
      cost = child.cost;
      recurse(child.pending, child.penalty);
      cell = kUnset;
      cost = saved_cost;
      used_ = saved_used;
    }
  }

  const InductionTask& task_;
  FamilyTable table_;
  int max_k_;
  int k_ = 0;
  int used_ = 0;
  std::array<Row, kMaxIntermediate + 1> delta_{};
  std::array<Row, kMaxIntermediate + 1> best_delta_{};
  std::array<double, kMaxIntermediate + 1> cost_{};
  int best_used_ = 0;
  double incumbent_ = 0.0;
  std::unordered_map<std::uint32_t, std::pair<int, int>> memo_;
};

}  // namespace

ScoredHypothesis brute_force_induce(const InductionTask& task) {
  const std::size_t n_props = task.alphabet.size();
  if (n_props == 0) throw ContractViolation("induction needs a non-empty alphabet");
  int guards = 1;
  for (std::size_t i = 0; i < n_props; ++i) guards *= 3;
  if (n_props > kMaxProps || task.max_intermediate_states > kMaxIntermediate || guards > kMaxGuards) {
    throw InstanceTooLargeError("brute-force induction is limited to 3 propositions and 2 intermediate states");
  }
  if (task.max_intermediate_states < 0) throw ContractViolation("max_intermediate_states must be >= 0");
  Oracle oracle(task);
  oracle.run();
  ScoredHypothesis h = score(oracle.machine(), task);
  if (std::isfinite(h.score) && std::abs(h.score - oracle.incumbent()) > 1e-6 * std::max(1.0, h.score)) {
    throw ContractViolation("oracle machine does not reproduce its search score");
  }
  return h;
}

}  // namespace probirm
