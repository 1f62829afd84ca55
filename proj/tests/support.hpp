#pragma once

// Seeded generators shared by the property tests.

#include "probirm/example_pool.hpp"
#include "probirm/machine.hpp"
#include "probirm/worlds.hpp"

#include <deque>
#include <map>

#include <random>
#include <string>
#include <vector>

namespace probirm::testing {

inline Alphabet letters(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
  return Alphabet(names);
}

inline Label random_label(std::size_t n_props, Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> bits(0, (1u << n_props) - 1);
  return Label(static_cast<std::uint16_t>(bits(rng)));
}

inline ProbLabel random_prob_label(std::size_t n_props, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd p(static_cast<Eigen::Index>(n_props));
  for (auto& x : p) {
    const double r = unit(rng);
    x = r < 0.2 ? 0.0 : r < 0.4 ? 1.0 : unit(rng);
  }
  return ProbLabel(p);
}

namespace detail {

inline void split_leaves(Guard g, int depth, std::size_t n_props, Rng& rng, std::vector<Guard>& out) {
  std::uniform_int_distribution<int> coin(0, 2);
  std::vector<PropId> free;
  for (PropId p = 0; p < n_props; ++p) {
    if (!g.positive.contains(p) && !g.negative.contains(p)) free.push_back(p);
  }
  if (depth == 0 || free.empty() || (depth < 3 && coin(rng) == 0)) {
    out.push_back(g);
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const PropId p = free[pick(rng)];
  Guard with = g;
  with.positive.insert(p);
  Guard without = g;
  without.negative.insert(p);
  split_leaves(with, depth - 1, n_props, rng, out);
  split_leaves(without, depth - 1, n_props, rng, out);
}

}  // namespace detail

/// Deterministic machine with u0 = 0, intermediates 1..k, uA = k+1 and
/// uR = k+2. Each state's guards are the leaves of a random decision tree,
/// hence pairwise exclusive.
inline RewardMachine random_machine(int k, std::size_t n_props, Rng& rng, int depth = 3) {
  const StateId accept = k + 1;
  const StateId reject = k + 2;
  RewardMachine rm(k + 3, 0, accept, reject);
  std::uniform_int_distribution<int> target(0, k + 2);
  for (StateId u = 0; u <= k; ++u) {
    std::vector<Guard> leaves;
    detail::split_leaves(Guard{}, depth, n_props, rng, leaves);
    for (const Guard& g : leaves) {
      const StateId v = target(rng);
      if (v == u) continue;
      rm.add_edge(u, v, g, v == accept ? 1.0 : 0.0);
    }
  }
  return rm;
}

inline SymbolicTrace random_trace(std::size_t n_props, std::size_t max_len, Rng& rng) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  SymbolicTrace t(len(rng));
  for (auto& l : t) l = random_label(n_props, rng);
  return t;
}

inline TraceOutcome outcome_of(const RewardMachine& rm, const SymbolicTrace& trace) {
  const StateId u = final_state(rm, trace);
  return u == rm.accepting() ? TraceOutcome::Goal : u == rm.rejecting() ? TraceOutcome::DeadEnd
                                                                        : TraceOutcome::Incomplete;
}

/// Noise-free examples labelled by `truth`, cut where it reaches a sink.
inline std::vector<WeightedExample> labelled_examples(const RewardMachine& truth, std::size_t n_props,
                                                      std::size_t count, std::size_t max_len, Rng& rng) {
  std::vector<WeightedExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    SymbolicTrace t = random_trace(n_props, max_len, rng);
    const auto states = traverse(truth, t);
    for (std::size_t j = 1; j < states.size(); ++j) {
      if (truth.is_sink(states[j])) {
        t.resize(j);
        break;
      }
    }
    out.push_back({i, 1.0, outcome_of(truth, t), compress(t)});
  }
  return out;
}

// Shortest action sequence that fetches coffee and then reaches the office
// without touching a decoration, by breadth-first search over (cell, has coffee).
inline std::vector<Action> coffee_plan(const GridMap& map) {
  using Node = std::pair<int, bool>;
  std::map<Node, std::pair<Node, Action>> parent;
  const Node start{map.cell_index(map.start()), false};
  std::deque<std::pair<Cell, bool>> queue{{map.start(), false}};
  parent[start] = {start, Action::Up};
  while (!queue.empty()) {
    auto [c, coffee] = queue.front();
    queue.pop_front();
    for (Action a : kActions) {
      const Cell n = map.move(c, a);
      const Label l = map.label_at(n);
      if (l.contains(office::kDecoration)) continue;
      const bool has = coffee || l.contains(office::kCoffee);
      const Node node{map.cell_index(n), has};
      if (parent.count(node)) continue;
      parent[node] = {{map.cell_index(c), coffee}, a};
      if (has && l.contains(office::kOffice)) {
        std::vector<Action> plan;
        for (Node cur = node; cur != start; cur = parent[cur].first) plan.insert(plan.begin(), parent[cur].second);
        return plan;
      }
      queue.emplace_back(n, has);
    }
  }
  return {};
}

}  // namespace probirm::testing
