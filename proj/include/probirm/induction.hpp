#pragma once

// Cost-optimal induction of deterministic reward machines from weighted
// examples. The objective is machine length plus the penalties of the
// examples the machine fails to cover.

#include "probirm/example_pool.hpp"
#include "probirm/guard_synthesis.hpp"
#include "probirm/machine.hpp"

#include <cstddef>
#include <vector>

namespace probirm {

struct InductionTask {
  Alphabet alphabet;
  std::vector<WeightedExample> examples;  // consolidated
  int max_intermediate_states = 1;
  LengthCost length_cost = LengthCost::EdgePlusLiterals;
  GuardSpace guard_space = GuardSpace::Full;
  double budget_seconds = 60.0;  // <= 0 disables the budget
  std::size_t node_budget = 0;   // search nodes; 0 disables. Unlike time, reproducible.
};

struct ScoredHypothesis {
  RewardMachine machine = RewardMachine::loop_machine();
  double length = 0.0;
  double penalty = 0.0;
  double score = 0.0;
  bool suboptimal = false;       // budget ran out before the search finished
  std::size_t nodes = 0;         // search nodes expanded
};

/// Goal needs the accepting state, DeadEnd the rejecting state, Incomplete
/// any other state.
bool covers(const RewardMachine& rm, const WeightedExample& ex);

ScoredHypothesis score(const RewardMachine& rm, const std::vector<WeightedExample>& examples,
                       LengthCost cost = LengthCost::EdgePlusLiterals);
ScoredHypothesis score(const RewardMachine& rm, const InductionTask& task);

/// Learned machines number their states u0 = 0, intermediate states 1..k,
/// then the accepting and rejecting sinks. Edges into the accepting state
/// carry reward 1.
///
/// Exact branch and bound over successor assignments of the (state, label)
/// pairs the examples reach, with iterative deepening on the number of
/// intermediate states. Throws ContractViolation for an empty alphabet.
ScoredHypothesis induce(const InductionTask& task);

/// Exhaustive reference solver for tiny instances: at most 3 propositions,
/// 2 intermediate states and 30 candidate guards. Always searches the full
/// guard space. Throws InstanceTooLargeError above those caps.
ScoredHypothesis brute_force_induce(const InductionTask& task);

}  // namespace probirm
