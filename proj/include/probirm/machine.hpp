#pragma once

// Reward machines over conjunctive guards: crisp traversal, belief filtering
// under probabilistic labels, and potential-based shaping over beliefs.

#include "probirm/events.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace probirm {

/// Conjunction of literals: every `positive` proposition present, every
/// `negative` one absent. The empty guard is always satisfied.
struct Guard {
  Label positive;
  Label negative;

  bool consistent() const { return !positive.intersects(negative); }
  int literal_count() const { return positive.size() + negative.size(); }

  friend bool operator==(const Guard&, const Guard&) = default;
  friend auto operator<=>(const Guard&, const Guard&) = default;
};

bool satisfies(Label label, const Guard& guard);

/// Two conjunctions can never hold together iff they share a complementary literal.
bool mutually_exclusive(const Guard& a, const Guard& b);

using StateId = int;

struct Edge {
  Guard guard;
  StateId to = 0;
  double reward = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class RewardMachine {
 public:
  RewardMachine(int n_states, StateId initial, StateId accepting, StateId rejecting);

  /// Three states {u0, uA, uR} and no edges: every label self-loops.
  static RewardMachine loop_machine();

  /// Appends an edge. Only local checks run here (state ids, guard
  /// consistency, no edges out of sinks); determinism is checked by
  /// `validate()` so that ill-formed machines can still be represented.
  void add_edge(StateId from, StateId to, Guard guard, double reward);

  int num_states() const { return static_cast<int>(edges_.size()); }
  StateId initial() const { return initial_; }
  StateId accepting() const { return accepting_; }
  StateId rejecting() const { return rejecting_; }
  bool is_sink(StateId u) const { return u == accepting_ || u == rejecting_; }
  std::span<const Edge> edges(StateId from) const { return edges_.at(static_cast<std::size_t>(from)); }
  std::size_t num_edges() const;

  /// Propositions mentioned by at least one guard.
  Label relevant_propositions() const;

  /// Pairwise complementary literals between the guards of every state.
  bool is_deterministic() const;

  /// Throws IllFormedMachineError if the machine violates any invariant.
  void validate() const;

  friend bool operator==(const RewardMachine&, const RewardMachine&) = default;

 private:
  void check_state(StateId u) const;

  StateId initial_;
  StateId accepting_;
  StateId rejecting_;
  std::vector<std::vector<Edge>> edges_;
};

struct Transition {
  StateId next;
  double reward;
};

/// One crisp step. Labels matching no guard self-loop with reward 0; throws
/// IllFormedMachineError if two guards of the state match.
Transition step(const RewardMachine& rm, StateId state, Label label);

/// Visited states, starting with the initial state; size is |trace| + 1.
std::vector<StateId> traverse(const RewardMachine& rm, const SymbolicTrace& trace);

StateId final_state(const RewardMachine& rm, const SymbolicTrace& trace);

// ---------------------------------------------------------------------------
// Beliefs

template <typename Scalar = double>
using BeliefVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
using BeliefTransition = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
BeliefVector<Scalar> initial_belief(const RewardMachine& rm) {
  BeliefVector<Scalar> b = BeliefVector<Scalar>::Zero(rm.num_states());
  b[rm.initial()] = Scalar(1);
  return b;
}

/// Precomputed crisp successors for every assignment of the machine's
/// relevant propositions; propositions no guard mentions marginalise out.
class BeliefKernel {
 public:
  explicit BeliefKernel(const RewardMachine& rm);

  int num_states() const { return n_states_; }
  const std::vector<PropId>& relevant() const { return relevant_; }

  /// Row-stochastic matrix T with T(u, v) = P(next = v | current = u).
  template <typename Scalar = double>
  BeliefTransition<Scalar> transition(const ProbLabel& pl) const {
    const std::size_t n_assign = std::size_t{1} << relevant_.size();
    std::vector<Scalar> weight(n_assign, Scalar(1));
    for (std::size_t j = 0; j < relevant_.size(); ++j) {
      const Scalar q(pl.probs[relevant_[j]]);
      for (std::size_t m = 0; m < n_assign; ++m) {
        weight[m] *= ((m >> j) & 1u) ? q : Scalar(1) - q;
      }
    }
    BeliefTransition<Scalar> t = BeliefTransition<Scalar>::Zero(n_states_, n_states_);
    for (std::size_t m = 0; m < n_assign; ++m) {
      const StateId* row = &next_[m * static_cast<std::size_t>(n_states_)];
      for (int u = 0; u < n_states_; ++u) t(u, row[u]) += weight[m];
    }
    return t;
  }

  template <typename Scalar = double>
  BeliefVector<Scalar> step(const BeliefVector<Scalar>& belief, const ProbLabel& pl) const {
    return transition<Scalar>(pl).transpose() * belief;
  }

 private:
  int n_states_;
  std::vector<PropId> relevant_;
  std::vector<StateId> next_;  // [assignment * n_states + u]
};

/// Belief after observing `pl`, summing over every label weighted by its
/// probability. The result is normalised by construction.
template <typename Scalar = double>
BeliefVector<Scalar> belief_step(const RewardMachine& rm, const BeliefVector<Scalar>& belief,
                                 const ProbLabel& pl) {
  return BeliefKernel(rm).step<Scalar>(belief, pl);
}

/// Lowest-id argmax.
template <typename Derived>
StateId most_likely_state(const Eigen::MatrixBase<Derived>& belief) {
  StateId best = 0;
  for (Eigen::Index u = 1; u < belief.size(); ++u) {
    if (belief[u] > belief[best]) best = static_cast<StateId>(u);
  }
  return best;
}

template <typename Derived>
bool is_terminal_belief(const RewardMachine& rm, const Eigen::MatrixBase<Derived>& belief) {
  return rm.is_sink(most_likely_state(belief));
}

// ---------------------------------------------------------------------------
// Shaping

inline constexpr double kUnreachablePotential = -std::numeric_limits<double>::infinity();

/// |U| minus the edge distance to the accepting state; kUnreachablePotential
/// where the accepting state cannot be reached.
Eigen::VectorXd potential(const RewardMachine& rm);

inline double default_shaping_floor(const RewardMachine& rm) { return -10.0 * rm.num_states(); }

/// Potential with unreachable states pinned to `floor`. Zero-belief states
/// then contribute nothing and leaked belief costs a finite amount.
Eigen::VectorXd shaping_potential(const RewardMachine& rm, double floor);

/// gamma * Phi(b_next) - Phi(b_prev) for a finite per-state potential.
template <typename Scalar = double>
Scalar shaped_reward(const Eigen::VectorXd& phi, const BeliefVector<Scalar>& b_prev,
                     const BeliefVector<Scalar>& b_next, Scalar gamma) {
  const auto phi_s = phi.cast<Scalar>();
  return gamma * b_next.dot(phi_s) - b_prev.dot(phi_s);
}

template <typename Scalar = double>
Scalar shaped_reward(const RewardMachine& rm, const BeliefVector<Scalar>& b_prev,
                     const BeliefVector<Scalar>& b_next, Scalar gamma) {
  return shaped_reward<Scalar>(shaping_potential(rm, default_shaping_floor(rm)), b_prev, b_next, gamma);
}

// ---------------------------------------------------------------------------
// Thresholding

/// Propositions whose posterior exceeds `threshold`.
Label threshold_label(const ProbLabel& pl, double threshold);

StateId threshold_step(const RewardMachine& rm, StateId state, const ProbLabel& pl, double threshold);

// ---------------------------------------------------------------------------
// Text format:
//   states N u0 uA uR
//   from to reward lit[,lit...]      (lit = name | !name, `-` for the empty guard)

std::string format_guard(const Guard& guard, const Alphabet& alphabet);
Guard parse_guard(std::string_view text, Alphabet& alphabet);

std::string format_machine(const RewardMachine& rm, const Alphabet& alphabet);

/// Unknown proposition names are registered in `alphabet`. The parsed machine
/// is validated.
RewardMachine parse_machine(std::string_view text, Alphabet& alphabet);

}  // namespace probirm
