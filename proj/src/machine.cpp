#include "probirm/machine.hpp"

#include "probirm/error.hpp"

#include <deque>
#include <sstream>

namespace probirm {

bool satisfies(Label label, const Guard& guard) {
  return guard.positive.subset_of(label) && !guard.negative.intersects(label);
}

bool mutually_exclusive(const Guard& a, const Guard& b) {
  return a.positive.intersects(b.negative) || a.negative.intersects(b.positive);
}

RewardMachine::RewardMachine(int n_states, StateId initial, StateId accepting, StateId rejecting)
    : initial_(initial), accepting_(accepting), rejecting_(rejecting) {
  if (n_states < 3) throw IllFormedMachineError("a reward machine needs at least 3 states");
  edges_.resize(static_cast<std::size_t>(n_states));
  check_state(initial);
  check_state(accepting);
  check_state(rejecting);
  if (accepting == rejecting || initial == accepting || initial == rejecting) {
    throw IllFormedMachineError("initial, accepting and rejecting states must be distinct");
  }
}

RewardMachine RewardMachine::loop_machine() { return RewardMachine(3, 0, 1, 2); }

void RewardMachine::check_state(StateId u) const {
  if (u < 0 || u >= num_states()) {
    throw IllFormedMachineError("state id " + std::to_string(u) + " out of range");
  }
}

void RewardMachine::add_edge(StateId from, StateId to, Guard guard, double reward) {
  check_state(from);
  check_state(to);
  if (is_sink(from)) throw IllFormedMachineError("accepting and rejecting states are absorbing");
  if (!guard.consistent()) throw IllFormedMachineError("guard contains a literal and its negation");
  edges_[static_cast<std::size_t>(from)].push_back(Edge{guard, to, reward});
}

std::size_t RewardMachine::num_edges() const {
  std::size_t n = 0;
  for (const auto& e : edges_) n += e.size();
  return n;
}

Label RewardMachine::relevant_propositions() const {
  Label out;
  for (const auto& list : edges_) {
    for (const auto& e : list) out = out | e.guard.positive | e.guard.negative;
  }
  return out;
}

bool RewardMachine::is_deterministic() const {
  for (const auto& list : edges_) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        if (!mutually_exclusive(list[i].guard, list[j].guard)) return false;
      }
    }
  }
  return true;
}

void RewardMachine::validate() const {
  for (StateId u = 0; u < num_states(); ++u) {
    const auto& list = edges_[static_cast<std::size_t>(u)];
    if (is_sink(u) && !list.empty()) throw IllFormedMachineError("sink state with outgoing edges");
    for (const auto& e : list) {
      check_state(e.to);
      if (!e.guard.consistent()) throw IllFormedMachineError("inconsistent guard");
    }
  }
  if (!is_deterministic()) {
    throw IllFormedMachineError("guards leaving the same state are not mutually exclusive");
  }
}

Transition step(const RewardMachine& rm, StateId state, Label label) {
  const Edge* hit = nullptr;
  for (const auto& e : rm.edges(state)) {
    if (!satisfies(label, e.guard)) continue;
    if (hit != nullptr) {
      throw IllFormedMachineError("two guards of state " + std::to_string(state) + " match the same label");
    }
    hit = &e;
  }
  if (hit == nullptr) return {state, 0.0};
  return {hit->to, hit->reward};
}

std::vector<StateId> traverse(const RewardMachine& rm, const SymbolicTrace& trace) {
  std::vector<StateId> out;
  out.reserve(trace.size() + 1);
  out.push_back(rm.initial());
  for (Label l : trace) out.push_back(step(rm, out.back(), l).next);
  return out;
}

StateId final_state(const RewardMachine& rm, const SymbolicTrace& trace) {
  StateId u = rm.initial();
  for (Label l : trace) {
    if (rm.is_sink(u)) break;
    u = step(rm, u, l).next;
  }
  return u;
}

BeliefKernel::BeliefKernel(const RewardMachine& rm) : n_states_(rm.num_states()) {
  rm.relevant_propositions().for_each([&](PropId p) { relevant_.push_back(p); });
  const std::size_t n_assign = std::size_t{1} << relevant_.size();
  next_.resize(n_assign * static_cast<std::size_t>(n_states_));
  for (std::size_t m = 0; m < n_assign; ++m) {
    Label l;
    for (std::size_t j = 0; j < relevant_.size(); ++j) {
      if ((m >> j) & 1u) l.insert(relevant_[j]);
    }
    for (StateId u = 0; u < n_states_; ++u) {
      next_[m * static_cast<std::size_t>(n_states_) + static_cast<std::size_t>(u)] = probirm::step(rm, u, l).next;
    }
  }
}

Eigen::VectorXd potential(const RewardMachine& rm) {
  const int n = rm.num_states();
  std::vector<std::vector<StateId>> reverse(static_cast<std::size_t>(n));
  for (StateId u = 0; u < n; ++u) {
    for (const auto& e : rm.edges(u)) reverse[static_cast<std::size_t>(e.to)].push_back(u);
  }
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::deque<StateId> queue{rm.accepting()};
  dist[static_cast<std::size_t>(rm.accepting())] = 0;
  while (!queue.empty()) {
    StateId v = queue.front();
    queue.pop_front();
    for (StateId u : reverse[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(u)] >= 0) continue;
      dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
      queue.push_back(u);
    }
  }
  Eigen::VectorXd phi(n);
  for (StateId u = 0; u < n; ++u) {
    const int d = dist[static_cast<std::size_t>(u)];
    phi[u] = d < 0 ? kUnreachablePotential : static_cast<double>(n - d);
  }
  return phi;
}

Eigen::VectorXd shaping_potential(const RewardMachine& rm, double floor) {
  Eigen::VectorXd phi = potential(rm);
  for (Eigen::Index u = 0; u < phi.size(); ++u) {
    if (phi[u] == kUnreachablePotential) phi[u] = floor;
  }
  return phi;
}

Label threshold_label(const ProbLabel& pl, double threshold) {
  Label out;
  for (std::size_t i = 0; i < pl.size(); ++i) {
    if (pl.probs[static_cast<Eigen::Index>(i)] > threshold) out.insert(static_cast<PropId>(i));
  }
  return out;
}

StateId threshold_step(const RewardMachine& rm, StateId state, const ProbLabel& pl, double threshold) {
  return step(rm, state, threshold_label(pl, threshold)).next;
}

std::string format_guard(const Guard& guard, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t p = 0; p < alphabet.size(); ++p) {
    const auto id = static_cast<PropId>(p);
    if (!guard.positive.contains(id) && !guard.negative.contains(id)) continue;
    if (!out.empty()) out += ',';
    if (guard.negative.contains(id)) out += '!';
    out += alphabet.name(id);
  }
  return out.empty() ? "-" : out;
}

Guard parse_guard(std::string_view text, Alphabet& alphabet) {
  Guard g;
  if (text == "-") return g;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string_view lit = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - start);
    if (lit.empty()) throw ParseError("empty literal in guard '" + std::string(text) + "'");
    if (lit.front() == '!') {
      g.negative.insert(alphabet.add(lit.substr(1)));
    } else {
      g.positive.insert(alphabet.add(lit));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!g.consistent()) throw ParseError("guard '" + std::string(text) + "' is contradictory");
  return g;
}

std::string format_machine(const RewardMachine& rm, const Alphabet& alphabet) {
  std::string out = "states " + std::to_string(rm.num_states()) + ' ' + std::to_string(rm.initial()) + ' ' +
                    std::to_string(rm.accepting()) + ' ' + std::to_string(rm.rejecting()) + '\n';
  for (StateId u = 0; u < rm.num_states(); ++u) {
    for (const auto& e : rm.edges(u)) {
      out += std::to_string(u) + ' ' + std::to_string(e.to) + ' ' + format_double(e.reward) + ' ' +
             format_guard(e.guard, alphabet) + '\n';
    }
  }
  return out;
}

RewardMachine parse_machine(std::string_view text, Alphabet& alphabet) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<RewardMachine> rm;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    const std::string where = " (line " + std::to_string(line_no) + ")";
    if (!rm) {
      int n = 0, u0 = 0, ua = 0, ur = 0;
      if (first != "states" || !(fields >> n >> u0 >> ua >> ur)) {
        throw ParseError("expected 'states N u0 uA uR' header" + where);
      }
      try {
        rm.emplace(n, u0, ua, ur);
      } catch (const IllFormedMachineError& e) {
        throw ParseError(std::string(e.what()) + where);
      }
      continue;
    }
    int from = 0, to = 0;
    std::string reward, guard, extra;
    try {
      from = std::stoi(first);
    } catch (const std::exception&) {
      throw ParseError("expected edge 'from to reward guard'" + where);
    }
    if (!(fields >> to >> reward >> guard) || (fields >> extra)) {
      throw ParseError("expected edge 'from to reward guard'" + where);
    }
    try {
      rm->add_edge(from, to, parse_guard(guard, alphabet), parse_double(reward));
    } catch (const IllFormedMachineError& e) {
      throw ParseError(std::string(e.what()) + where);
    }
  }
  if (!rm) throw ParseError("missing 'states' header");
  try {
    rm->validate();
  } catch (const IllFormedMachineError& e) {
    throw ParseError(e.what());
  }
  return *rm;
}

}  // namespace probirm
