#include "probirm/worlds.hpp"

#include "probirm/error.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace probirm {

const char* action_name(Action a) {
  switch (a) {
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

namespace office {

const Alphabet& alphabet() {
  static const Alphabet names({"coffee", "mail", "office", "A", "B", "C", "D", "decoration"});
  return names;
}

}  // namespace office

namespace {

using office::kA;
using office::kB;
using office::kC;
using office::kCoffee;
using office::kD;
using office::kDecoration;
using office::kMail;
using office::kOffice;

constexpr char kPropChars[] = {'c', 'm', 'o', 'A', 'B', 'C', 'D', '*'};

void add_canonical_walls(GridMap& map) {
  // Vertical walls between columns 2|3, 5|6 and 8|9, open at rows 1 and 7.
  for (int x : {2, 5, 8}) {
    for (int y = 0; y < office::kHeight; ++y) {
      if (y == 1 || y == 7) continue;
      map.add_wall({x, y}, {x + 1, y});
    }
  }
  // Horizontal walls between rows 2|3 (open at columns 1, 10) and rows 5|6
  // (open at columns 1, 4, 7, 10).
  for (int x = 0; x < office::kWidth; ++x) {
    if (x != 1 && x != 10) map.add_wall({x, 2}, {x, 3});
    if (x != 1 && x != 4 && x != 7 && x != 10) map.add_wall({x, 5}, {x, 6});
  }
}

Guard guard(std::initializer_list<PropId> pos, std::initializer_list<PropId> neg) {
  return Guard{Label(pos), Label(neg)};
}

}  // namespace

GridMap::GridMap()
    : placements_(office::alphabet().size()),
      labels_(static_cast<std::size_t>(office::kWidth * office::kHeight)),
      start_{0, 0} {}

GridMap GridMap::canonical() {
  GridMap map;
  add_canonical_walls(map);
  map.place(kCoffee, {3, 6});
  map.place(kCoffee, {8, 2});
  map.place(kMail, {7, 4});
  map.place(kOffice, {4, 4});
  map.place(kA, {1, 1});
  map.place(kB, {10, 1});
  map.place(kC, {10, 7});
  map.place(kD, {1, 7});
  for (Cell c : {Cell{4, 7}, Cell{7, 7}, Cell{1, 4}, Cell{10, 4}, Cell{4, 1}, Cell{7, 1}}) {
    map.place(kDecoration, c);
  }
  map.set_start({4, 6});
  return map;
}

void GridMap::add_wall(Cell a, Cell b) {
  if (!in_bounds(a) || !in_bounds(b) || std::abs(a.x - b.x) + std::abs(a.y - b.y) != 1) {
    throw ContractViolation("walls separate two adjacent in-bounds cells");
  }
  int i = cell_index(a), j = cell_index(b);
  walls_.emplace(std::min(i, j), std::max(i, j));
}

bool GridMap::wall_between(Cell a, Cell b) const {
  int i = cell_index(a), j = cell_index(b);
  return walls_.count({std::min(i, j), std::max(i, j)}) > 0;
}

void GridMap::place(PropId p, Cell c) {
  if (!in_bounds(c)) throw ContractViolation("placement outside the grid");
  if (p >= placements_.size()) throw ContractViolation("unknown proposition id");
  auto& cells = placements_[p];
  if (labels_[static_cast<std::size_t>(cell_index(c))].contains(p)) return;
  // Sorted, so equality does not depend on placement order.
  cells.insert(std::lower_bound(cells.begin(), cells.end(), c), c);
  labels_[static_cast<std::size_t>(cell_index(c))].insert(p);
}

void GridMap::set_start(Cell c) {
  if (!in_bounds(c)) throw ContractViolation("start cell outside the grid");
  start_ = c;
}

Label GridMap::label_at(Cell c) const { return labels_.at(static_cast<std::size_t>(cell_index(c))); }

Cell GridMap::move(Cell from, Action a) const {
  Cell to = from;
  switch (a) {
    case Action::Up: ++to.y; break;
    case Action::Down: --to.y; break;
    case Action::Left: --to.x; break;
    case Action::Right: ++to.x; break;
  }
  if (!in_bounds(to) || wall_between(from, to)) return from;
  return to;
}

double GridMap::occupancy_prior(PropId p) const {
  return static_cast<double>(placements_.at(p).size()) / static_cast<double>(num_cells());
}

RewardMachine make_task(std::string_view name) {
  if (name == "coffee") {
    // u0 = 0, u1 = 1, uA = 2, uR = 3
    RewardMachine rm(4, 0, 2, 3);
    rm.add_edge(0, 1, guard({kCoffee}, {kOffice, kDecoration}), 0.0);
    rm.add_edge(0, 3, guard({kDecoration}, {}), 0.0);
    rm.add_edge(0, 2, guard({kCoffee, kOffice}, {kDecoration}), 1.0);
    rm.add_edge(1, 3, guard({kDecoration}, {}), 0.0);
    rm.add_edge(1, 2, guard({kOffice}, {kDecoration}), 1.0);
    return rm;
  }
  if (name == "coffeemail") {
    // progress: 0 none, 1 coffee, 2 mail, 3 both; uA = 4, uR = 5
    RewardMachine rm(6, 0, 4, 5);
    rm.add_edge(0, 1, guard({kCoffee}, {kMail, kDecoration}), 0.0);
    rm.add_edge(0, 2, guard({kMail}, {kCoffee, kDecoration}), 0.0);
    rm.add_edge(0, 3, guard({kCoffee, kMail}, {kOffice, kDecoration}), 0.0);
    rm.add_edge(0, 4, guard({kCoffee, kMail, kOffice}, {kDecoration}), 1.0);
    rm.add_edge(0, 5, guard({kDecoration}, {}), 0.0);
    rm.add_edge(1, 3, guard({kMail}, {kOffice, kDecoration}), 0.0);
    rm.add_edge(1, 4, guard({kMail, kOffice}, {kDecoration}), 1.0);
    rm.add_edge(1, 5, guard({kDecoration}, {}), 0.0);
    rm.add_edge(2, 3, guard({kCoffee}, {kOffice, kDecoration}), 0.0);
    rm.add_edge(2, 4, guard({kCoffee, kOffice}, {kDecoration}), 1.0);
    rm.add_edge(2, 5, guard({kDecoration}, {}), 0.0);
    rm.add_edge(3, 4, guard({kOffice}, {kDecoration}), 1.0);
    rm.add_edge(3, 5, guard({kDecoration}, {}), 0.0);
    return rm;
  }
  if (name == "visitabcd") {
    // progress: 0 none, 1 A, 2 AB, 3 ABC; uA = 4, uR = 5
    RewardMachine rm(6, 0, 4, 5);
    const PropId order[] = {kA, kB, kC, kD};
    for (StateId u = 0; u < 4; ++u) {
      const bool last = u == 3;
      rm.add_edge(u, last ? 4 : u + 1, guard({order[u]}, {kDecoration}), last ? 1.0 : 0.0);
      rm.add_edge(u, 5, guard({kDecoration}, {}), 0.0);
    }
    return rm;
  }
  throw ConfigError("unknown task '" + std::string(name) + "' (expected coffee, coffeemail or visitabcd)");
}

Label first_event_propositions(std::string_view task) {
  if (task == "coffee") return Label{kCoffee};
  if (task == "coffeemail") return Label{kCoffee, kMail};
  if (task == "visitabcd") return Label{kA};
  throw ConfigError("unknown task '" + std::string(task) + "'");
}

Label task_propositions(std::string_view task) { return make_task(task).relevant_propositions(); }

bool task_solvable(const GridMap& map, const RewardMachine& task) {
  const int n_cells = map.num_cells();
  std::vector<char> seen(static_cast<std::size_t>(n_cells * task.num_states()), 0);
  auto key = [&](Cell c, StateId u) { return static_cast<std::size_t>(u * n_cells + map.cell_index(c)); };
  std::deque<std::pair<Cell, StateId>> queue{{map.start(), task.initial()}};
  seen[key(map.start(), task.initial())] = 1;
  while (!queue.empty()) {
    auto [c, u] = queue.front();
    queue.pop_front();
    for (Action a : kActions) {
      Cell next = map.move(c, a);
      StateId v = step(task, u, map.label_at(next)).next;
      if (v == task.accepting()) return true;
      if (v == task.rejecting() || seen[key(next, v)]) continue;
      seen[key(next, v)] = 1;
      queue.emplace_back(next, v);
    }
  }
  return false;
}

GridMap random_map(std::string_view task_name, Rng& rng) {
  const RewardMachine task = make_task(task_name);
  const GridMap reference = GridMap::canonical();
  while (true) {
    GridMap map;
    add_canonical_walls(map);
    std::vector<Cell> cells;
    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) cells.push_back({x, y});
    }
    std::shuffle(cells.begin(), cells.end(), rng);
    std::size_t next = 0;
    map.set_start(cells[next++]);
    for (std::size_t p = 0; p < reference.num_propositions(); ++p) {
      for (std::size_t k = 0; k < reference.placements(static_cast<PropId>(p)).size(); ++k) {
        map.place(static_cast<PropId>(p), cells[next++]);
      }
    }
    if (task_solvable(map, task)) return map;
  }
}

TaskMonitor::TaskMonitor(RewardMachine rm) : rm_(std::move(rm)), state_(rm_.initial()) {}

double TaskMonitor::advance(Label label) {
  Transition t = step(rm_, state_, label);
  state_ = t.next;
  return t.reward;
}

StepResult env_step(const GridMap& map, const EnvState& state, Action action, const SensorBank& bank,
                    TaskMonitor& monitor, Rng& rng) {
  if (monitor.terminal()) throw ContractViolation("env_step on a terminated episode");
  StepResult r;
  r.next.position = map.move(state.position, action);
  r.truth = map.label_at(r.next.position);
  monitor.advance(r.truth);
  r.terminal = monitor.terminal();
  r.goal = monitor.goal();
  r.reward = (r.terminal && r.goal) ? 1.0 : 0.0;
  r.label = sense(bank, r.truth, rng);
  return r;
}

std::string format_map(const GridMap& map) {
  std::string out;
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      Cell c{x, y};
      Label l = map.label_at(c);
      char ch = '.';
      if (l.size() > 1) throw ContractViolation("map text format holds one proposition per cell");
      l.for_each([&](PropId p) { ch = kPropChars[p]; });
      if (c == map.start()) {
        if (!l.empty()) throw ContractViolation("start cell carries a proposition");
        ch = '@';
      }
      out += ch;
    }
    out += '\n';
  }
  for (auto [i, j] : map.walls()) {
    out += "wall " + std::to_string(i % map.width()) + ' ' + std::to_string(i / map.width()) + ' ' +
           std::to_string(j % map.width()) + ' ' + std::to_string(j / map.width()) + '\n';
  }
  return out;
}

GridMap parse_map(std::string_view text) {
  std::istringstream in{std::string(text)};
  GridMap map;
  std::string line;
  int row = 0;
  bool have_start = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (row < map.height()) {
      if (static_cast<int>(line.size()) != map.width()) {
        throw ParseError("map row " + std::to_string(row) + " must have " + std::to_string(map.width()) +
                         " characters");
      }
      const int y = map.height() - 1 - row;
      for (int x = 0; x < map.width(); ++x) {
        const char ch = line[static_cast<std::size_t>(x)];
        if (ch == '.') continue;
        if (ch == '@') {
          map.set_start({x, y});
          have_start = true;
          continue;
        }
        const char* hit = std::find(std::begin(kPropChars), std::end(kPropChars), ch);
        if (hit == std::end(kPropChars)) throw ParseError(std::string("unknown map character '") + ch + "'");
        map.place(static_cast<PropId>(hit - std::begin(kPropChars)), {x, y});
      }
      ++row;
      continue;
    }
    std::istringstream fields(line);
    std::string kw;
    Cell a, b;
    if (!(fields >> kw >> a.x >> a.y >> b.x >> b.y) || kw != "wall") {
      throw ParseError("expected 'wall x1 y1 x2 y2', got '" + line + "'");
    }
    try {
      map.add_wall(a, b);
    } catch (const ContractViolation& e) {
      throw ParseError(e.what());
    }
  }
  if (row != map.height()) throw ParseError("map needs " + std::to_string(map.height()) + " rows");
  if (!have_start) throw ParseError("map has no start cell '@'");
  return map;
}

}  // namespace probirm
