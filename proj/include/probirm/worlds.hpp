#pragma once

// OfficeWorld: a 12x9 labelled grid with walls between cells, the Coffee,
// CoffeeMail and VisitABCD tasks and a noisy labelling function on top.

#include "probirm/events.hpp"
#include "probirm/machine.hpp"
#include "probirm/sensors.hpp"

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace probirm {

enum class Action : std::uint8_t { Up, Down, Left, Right };

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kActions{Action::Up, Action::Down, Action::Left, Action::Right};

const char* action_name(Action a);

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct EnvState {
  Cell position;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

namespace office {

inline constexpr int kWidth = 12;
inline constexpr int kHeight = 9;

inline constexpr PropId kCoffee = 0;
inline constexpr PropId kMail = 1;
inline constexpr PropId kOffice = 2;
inline constexpr PropId kA = 3;
inline constexpr PropId kB = 4;
inline constexpr PropId kC = 5;
inline constexpr PropId kD = 6;
inline constexpr PropId kDecoration = 7;

/// coffee, mail, office, A, B, C, D, decoration (ids 0..7).
const Alphabet& alphabet();

}  // namespace office

class GridMap {
 public:
  GridMap();

  /// The reference layout: fixed walls, fixed placements, start at (4,6).
  static GridMap canonical();

  int width() const { return office::kWidth; }
  int height() const { return office::kHeight; }
  int num_cells() const { return width() * height(); }
  int cell_index(Cell c) const { return c.y * width() + c.x; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width() && c.y >= 0 && c.y < height(); }

  void add_wall(Cell a, Cell b);
  bool wall_between(Cell a, Cell b) const;
  const std::set<std::pair<int, int>>& walls() const { return walls_; }

  void place(PropId p, Cell c);
  /// Cells carrying `p`, sorted.
  const std::vector<Cell>& placements(PropId p) const { return placements_.at(p); }
  std::size_t num_propositions() const { return placements_.size(); }

  Cell start() const { return start_; }
  void set_start(Cell c);

  /// Propositions placed at `c`.
  Label label_at(Cell c) const;

  /// Deterministic move; blocked by walls and the grid border.
  Cell move(Cell from, Action a) const;

  /// Fraction of walkable cells carrying `p`.
  double occupancy_prior(PropId p) const;

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  std::set<std::pair<int, int>> walls_;  // ordered cell-index pairs
  std::vector<std::vector<Cell>> placements_;
  std::vector<Label> labels_;
  Cell start_;
};

/// Fresh placements (same counts as the canonical map) and start cell on the
/// canonical walls; resamples until the task is solvable without touching a
/// decoration.
GridMap random_map(std::string_view task, Rng& rng);

/// Ground-truth machine of `coffee`, `coffeemail` or `visitabcd` over the
/// OfficeWorld alphabet. Throws ConfigError for other names.
RewardMachine make_task(std::string_view name);

/// Propositions whose sensors are noisy under the noise-first setting.
Label first_event_propositions(std::string_view task);

/// Propositions referenced by the task's machine (the noise-all setting).
Label task_propositions(std::string_view task);

/// True iff the task can be completed from the start cell without entering a
/// decoration cell.
bool task_solvable(const GridMap& map, const RewardMachine& task);

/// Deterministic monitor driving termination from ground-truth labels.
class TaskMonitor {
 public:
  explicit TaskMonitor(RewardMachine rm);

  void reset() { state_ = rm_.initial(); }
  /// Advances on `label`; returns the reward of the transition taken.
  double advance(Label label);
  StateId state() const { return state_; }
  bool terminal() const { return rm_.is_sink(state_); }
  bool goal() const { return state_ == rm_.accepting(); }
  const RewardMachine& machine() const { return rm_; }

 private:
  RewardMachine rm_;
  StateId state_;
};

struct StepResult {
  EnvState next;
  ProbLabel label;
  Label truth;
  double reward = 0.0;
  bool terminal = false;
  bool goal = false;
};

/// One environment transition. The ground-truth label is the set of
/// propositions at the destination cell. Throws ContractViolation if the
/// monitor is already terminal.
StepResult env_step(const GridMap& map, const EnvState& state, Action action, const SensorBank& bank,
                    TaskMonitor& monitor, Rng& rng);

// Map text format: `height` rows of `width` characters from the top row
// (y = height-1) down, then one `wall x1 y1 x2 y2` line per wall.
// Characters: '.' empty, 'c' coffee, 'm' mail, 'o' office, 'A'..'D', '*'
// decoration, '@' start cell (carries no proposition).
std::string format_map(const GridMap& map);
GridMap parse_map(std::string_view text);

}  // namespace probirm
