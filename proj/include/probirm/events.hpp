#pragma once

// Symbolic vocabulary shared by every other module: propositions, labels,
// probabilistic labels, traces and episode outcomes.

#include <Eigen/Core>

#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace probirm {

using Rng = std::mt19937_64;

inline constexpr std::size_t kMaxPropositions = 16;

using PropId = std::uint8_t;

/// Set of propositions stored as a fixed-width bitset.
class Label {
 public:
  constexpr Label() = default;
  constexpr explicit Label(std::uint16_t bits) : bits_(bits) {}
  Label(std::initializer_list<PropId> props) {
    for (PropId p : props) insert(p);
  }

  constexpr std::uint16_t bits() const { return bits_; }
  constexpr bool contains(PropId p) const { return (bits_ >> p) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool subset_of(Label other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr bool intersects(Label other) const { return (bits_ & other.bits_) != 0; }

  void insert(PropId p) { bits_ = static_cast<std::uint16_t>(bits_ | (1u << p)); }
  void erase(PropId p) { bits_ = static_cast<std::uint16_t>(bits_ & ~(1u << p)); }

  friend constexpr Label operator|(Label a, Label b) { return Label(a.bits_ | b.bits_); }
  friend constexpr Label operator&(Label a, Label b) { return Label(a.bits_ & b.bits_); }
  friend constexpr Label operator-(Label a, Label b) {
    return Label(static_cast<std::uint16_t>(a.bits_ & ~b.bits_));
  }
  friend constexpr bool operator==(Label, Label) = default;
  friend constexpr auto operator<=>(Label, Label) = default;

  template <typename F>
  void for_each(F&& f) const {
    for (std::uint16_t rest = bits_; rest != 0; rest &= rest - 1) {
      f(static_cast<PropId>(std::countr_zero(rest)));
    }
  }

 private:
  std::uint16_t bits_ = 0;
};

/// Dense, name-addressable set of propositions.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(const std::vector<std::string>& names);

  /// Returns the id of `name`, registering it if unseen.
  PropId add(std::string_view name);
  std::optional<PropId> find(std::string_view name) const;
  /// Throws ParseError for unknown names.
  PropId id(std::string_view name) const;
  const std::string& name(PropId p) const { return names_.at(p); }
  std::size_t size() const { return names_.size(); }
  Label full() const;
  const std::vector<std::string>& names() const { return names_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, PropId> index_;
};

/// Posterior probability of occurrence for every proposition at one transition.
struct ProbLabel {
  Eigen::VectorXd probs;

  ProbLabel() = default;
  explicit ProbLabel(Eigen::VectorXd p);

  /// Indicator vector of `label`: probability one on its members, zero elsewhere.
  static ProbLabel certain(Label label, std::size_t alphabet_size);

  std::size_t size() const { return static_cast<std::size_t>(probs.size()); }
  double operator[](PropId p) const { return probs[p]; }
  /// The crisp label when every entry is 0 or 1.
  std::optional<Label> crisp() const;

  friend bool operator==(const ProbLabel& a, const ProbLabel& b) {
    return a.probs.size() == b.probs.size() && a.probs == b.probs;
  }
};

using NoisyTrace = std::vector<ProbLabel>;
using SymbolicTrace = std::vector<Label>;

enum class TraceOutcome : std::uint8_t { Goal, DeadEnd, Incomplete };

inline constexpr std::size_t kOutcomeCount = 3;

char outcome_code(TraceOutcome o);
TraceOutcome parse_outcome(char code);
const char* outcome_name(TraceOutcome o);

/// Drops consecutive repetitions of the same label.
SymbolicTrace compress(const SymbolicTrace& trace);

// ---------------------------------------------------------------------------
// Trace file format: `OUTCOME;step|step|...`, OUTCOME in {G,D,I}. A step is a
// comma-separated list of `name:prob` pairs or bare names; `-` is the empty
// step. A trace with no steps has nothing after the separator.

std::string format_label(Label label, const Alphabet& alphabet);
std::string format_prob_label(const ProbLabel& pl, const Alphabet& alphabet);
std::string format_symbolic_steps(const SymbolicTrace& trace, const Alphabet& alphabet);
std::string format_noisy_steps(const NoisyTrace& trace, const Alphabet& alphabet);

std::string format_symbolic_line(TraceOutcome outcome, const SymbolicTrace& trace,
                                 const Alphabet& alphabet);
std::string format_noisy_line(TraceOutcome outcome, const NoisyTrace& trace,
                              const Alphabet& alphabet);

struct TraceRecord {
  TraceOutcome outcome = TraceOutcome::Incomplete;
  NoisyTrace steps;

  /// Steps as crisp labels; entries with probability > 0.5 count as present.
  SymbolicTrace symbolic() const;
};

/// Parses the step list after the outcome separator. Unknown names are
/// registered in `alphabet`; probability vectors are sized to the alphabet at
/// the time of the call.
NoisyTrace parse_steps(std::string_view steps, Alphabet& alphabet);

TraceRecord parse_trace_line(std::string_view line, Alphabet& alphabet);

/// Reads every non-empty, non-comment line. All probability vectors are padded
/// to the final alphabet size.
std::vector<TraceRecord> read_traces(std::istream& in, Alphabet& alphabet);

void resize_to_alphabet(NoisyTrace& trace, std::size_t alphabet_size);

std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace probirm
