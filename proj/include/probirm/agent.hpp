#pragma once

// Tabular Q-learning over (environment state, binned belief) with
// epsilon-greedy exploration.

#include "probirm/events.hpp"
#include "probirm/worlds.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <unordered_map>
#include <vector>

namespace probirm {

struct ExplorationSchedule {
  double start = 1.0;
  double end = 0.1;
  std::size_t decay_steps = 2000;

  /// Linear decay from `start` to `end` over `decay_steps`, then constant.
  double epsilon(std::size_t step) const {
    if (decay_steps == 0 || step >= decay_steps) return end;
    return start + (end - start) * static_cast<double>(step) / static_cast<double>(decay_steps);
  }
};

/// Belief components truncated to `decimals` decimal places, stored as
/// integers in units of 10^-decimals.
using BinnedBelief = std::vector<std::uint16_t>;

/// The small offset absorbs representation error so that 0.3 bins as 0.30
/// rather than 0.29; it grows with the scalar's machine epsilon.
template <typename Derived>
BinnedBelief bin_belief(const Eigen::MatrixBase<Derived>& belief, int decimals) {
  using Scalar = typename Derived::Scalar;
  const double scale = std::pow(10.0, decimals);
  const double offset = std::max(1e-9, 8.0 * static_cast<double>(std::numeric_limits<Scalar>::epsilon()) * scale);
  BinnedBelief out(static_cast<std::size_t>(belief.size()));
  for (Eigen::Index i = 0; i < belief.size(); ++i) {
    const double v = std::floor(static_cast<double>(belief[i]) * scale + offset);
    out[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(std::clamp(v, 0.0, scale));
  }
  return out;
}

struct QKey {
  int state = 0;  // environment state index
  BinnedBelief belief;

  friend bool operator==(const QKey&, const QKey&) = default;
  friend auto operator<=>(const QKey&, const QKey&) = default;
};

struct QKeyHash {
  std::size_t operator()(const QKey& key) const;
};

class QTable {
 public:
  using Values = std::array<double, kNumActions>;

  /// Missing entries read as zero.
  const Values& get(const QKey& key) const;
  Values& at(const QKey& key) { return table_[key]; }
  double max_value(const QKey& key) const;

  std::size_t size() const { return table_.size(); }
  void clear() { table_.clear(); }
  bool operator==(const QTable& other) const { return table_ == other.table_; }

  /// One line per key, sorted: `state b0,b1,... q_up q_down q_left q_right`
  /// with beliefs in units of 10^-decimals.
  void dump(std::ostream& out) const;
  static QTable load(std::istream& in);

 private:
  std::unordered_map<QKey, Values, QKeyHash> table_;
};

/// Uniform random action with probability epsilon; otherwise the greedy
/// action with ties broken uniformly.
Action select_action(const QTable& q, const QKey& key, double epsilon, Rng& rng);

/// q(key, a) <- (1-alpha) q(key, a) + alpha (reward + gamma max q(next, .)),
/// with no bootstrap term when `terminal`.
void q_update(QTable& q, const QKey& key, Action a, double reward, const QKey& next, bool terminal, double alpha,
              double gamma);

}  // namespace probirm
