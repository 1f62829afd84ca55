#pragma once

// Turning noisy traces into penalty-weighted classified examples for the
// machine inducer.

#include "probirm/events.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace probirm {

inline constexpr double kHardPenalty = std::numeric_limits<double>::infinity();

struct WeightedExample {
  std::size_t id = 0;
  double penalty = 1.0;  // kHardPenalty for examples that must be covered
  TraceOutcome outcome = TraceOutcome::Incomplete;
  SymbolicTrace body;  // compressed

  friend bool operator==(const WeightedExample&, const WeightedExample&) = default;
};

/// Draws each proposition at each step from Bernoulli(probs) independently.
SymbolicTrace sample_trace(const NoisyTrace& trace, Rng& rng);

/// Sampled, compressed trace with penalty 1.
WeightedExample sample_example(const NoisyTrace& trace, TraceOutcome outcome, Rng& rng, std::size_t id = 0);

struct PrefixPolicy {
  enum class Kind { All, Uniform };
  Kind kind = Kind::Uniform;
  std::size_t count = 4;  // prefixes per trace for Uniform

  static PrefixPolicy all() { return {Kind::All, 0}; }
  static PrefixPolicy uniform(std::size_t n) { return {Kind::Uniform, n}; }
};

/// Incomplete examples from proper prefixes of `trace`. Uniform(n) draws
/// min(n, |trace|-1) distinct prefix lengths without replacement; ids are
/// assigned consecutively from `first_id`.
std::vector<WeightedExample> incomplete_prefixes(const NoisyTrace& trace, Rng& rng, PrefixPolicy policy,
                                                 std::size_t first_id = 0);

/// Merges identical (outcome, body) pairs by summing penalties, then rescales
/// finite penalties so every non-empty class carries total/(#classes) mass.
/// The result is sorted by body length, body, then outcome.
std::vector<WeightedExample> consolidate(std::vector<WeightedExample> pool);

/// Sum of finite penalties per outcome class, indexed by TraceOutcome.
std::array<double, kOutcomeCount> class_mass(const std::vector<WeightedExample>& pool);

// Pool file: `OUTCOME;PENALTY;step|step|...` (trace format plus a penalty column).
std::string format_example(const WeightedExample& ex, const Alphabet& alphabet);
WeightedExample parse_example(std::string_view line, Alphabet& alphabet);
void write_pool(std::ostream& out, const std::vector<WeightedExample>& pool, const Alphabet& alphabet);
std::vector<WeightedExample> read_pool(std::istream& in, Alphabet& alphabet);

}  // namespace probirm
