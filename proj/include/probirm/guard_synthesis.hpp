#pragma once

// Minimal guard sets for a single machine state: given which labels must move
// to which successor and which must self-loop, find pairwise exclusive
// conjunctions of least total length.

#include "probirm/machine.hpp"

#include <climits>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace probirm {

enum class LengthCost {
  EdgePlusLiterals,  // 1 + number of literals per edge
  LiteralsOnly,      // number of literals
};

enum class GuardSpace {
  Full,      // every consistent conjunction
  Observed,  // positives equal to the covered label, or a single literal
};

int guard_cost(const Guard& guard, LengthCost cost);

/// Length of a machine: the sum of guard costs over all edges.
int machine_length(const RewardMachine& rm, LengthCost cost);

/// A label that must satisfy no guard (cls == 0) or a guard of group `cls`.
struct LabelClass {
  Label label;
  int cls = 0;
};

struct GuardChoice {
  Guard guard;
  int cls = 0;
};

class GuardSynthesizer {
 public:
  explicit GuardSynthesizer(LengthCost cost = LengthCost::EdgePlusLiterals, GuardSpace space = GuardSpace::Full)
      : cost_(cost), space_(space) {}

  /// Minimal total cost. Exact when it does not exceed `limit`; otherwise
  /// some value greater than `limit`. Labels must be distinct.
  int cost(const std::vector<LabelClass>& constraints, int limit = INT_MAX / 2);

  /// A minimal guard set. Classes in the result refer to the input classes.
  std::vector<GuardChoice> solve(const std::vector<LabelClass>& constraints);

  std::size_t cache_size() const { return cache_.size(); }
  void clear() { cache_.clear(); }

 private:
  struct Entry {
    int value;
    bool exact;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint32_t>& key) const;
  };

  LengthCost cost_;
  GuardSpace space_;
  std::unordered_map<std::vector<std::uint32_t>, Entry, KeyHash> cache_;
};

}  // namespace probirm
