#include "probirm/interleave.hpp"

#include "probirm/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace probirm {

RunState make_run_state(const InterleaveConfig& cfg, std::uint64_t seed) {
  RunState run;
  run.max_states = cfg.initial_max_states;
  run.rng.seed(seed);
  return run;
}

RunState make_baseline_state(const RewardMachine& task, std::uint64_t seed) {
  RunState run;
  run.rm = task;
  run.learning = false;
  run.rng.seed(seed);
  return run;
}

Eigen::VectorXd episode_potential(const RewardMachine& rm, double floor_scale) {
  const Eigen::VectorXd raw = potential(rm);
  if (raw[rm.initial()] == kUnreachablePotential) return Eigen::VectorXd::Zero(rm.num_states());
  return shaping_potential(rm, -floor_scale * rm.num_states());
}

EpisodeResult run_episode(RunState& run, const Environment& env, const InterleaveConfig& cfg) {
  const RewardMachine& rm = run.rm;
  const BeliefKernel kernel(rm);
  const Eigen::VectorXd phi = episode_potential(rm, cfg.shaping_floor_scale);
  TaskMonitor monitor(env.task);

  EpisodeResult out;
  EnvState s{env.map.start()};
  Eigen::VectorXd b = initial_belief(rm);
  StateId crisp = rm.initial();
  QKey key{env.map.cell_index(s.position), bin_belief(b, cfg.bin_decimals)};

  for (std::size_t t = 0; t < cfg.max_ep_len; ++t) {
    const Action a = select_action(run.q, key, cfg.exploration.epsilon(run.global_steps), run.rng);
    const StepResult step = env_step(env.map, s, a, env.sensors, monitor, run.rng);
    out.trace.push_back(step.label);

    Eigen::VectorXd next_b;
    if (cfg.threshold) {
      crisp = threshold_step(rm, crisp, step.label, *cfg.threshold);
      next_b = Eigen::VectorXd::Zero(rm.num_states());
      next_b[crisp] = 1.0;
    } else {
      next_b = kernel.step(b, step.label);
    }
    const bool belief_done = is_terminal_belief(rm, next_b);
    const bool done = step.terminal || belief_done;
    double reward = step.reward;
    if (cfg.shaping) reward += shaped_reward<double>(phi, b, next_b, cfg.gamma);

    QKey next_key{env.map.cell_index(step.next.position), bin_belief(next_b, cfg.bin_decimals)};
    q_update(run.q, key, a, reward, next_key, done, cfg.alpha, cfg.gamma);
    ++run.global_steps;
    out.ret += step.reward;

    s = step.next;
    b = std::move(next_b);
    key = std::move(next_key);
    if (done) {
      out.belief_terminated = belief_done && !step.terminal;
      break;
    }
  }
  out.outcome = monitor.goal() ? TraceOutcome::Goal : monitor.terminal() ? TraceOutcome::DeadEnd
                                                                          : TraceOutcome::Incomplete;
  out.final_belief = std::move(b);
  return out;
}

double recognize_belief(const RewardMachine& rm, TraceOutcome outcome, const Eigen::VectorXd& belief) {
  const double accept = belief[rm.accepting()];
  const double reject = belief[rm.rejecting()];
  double p = 0.0;
  switch (outcome) {
    case TraceOutcome::Goal:
      p = accept;
      break;
    case TraceOutcome::DeadEnd:
      p = reject;
      break;
    case TraceOutcome::Incomplete:
      p = 1.0 - accept - reject;
      break;
  }
  return -std::log(std::clamp(p, 1e-10, 1.0));
}

bool should_relearn(const RunState& run, const InterleaveConfig& cfg) {
  if (run.step_cnt < cfg.warmup || run.step_cnt == 0) return false;
  const double avg = run.ce_sum / static_cast<double>(run.step_cnt);
  return cfg.relearn_when == RelearnWhen::Above ? avg > cfg.beta : avg < cfg.beta;
}

namespace {

ScoredHypothesis induce_with_cap(const RunState& run, const InterleaveConfig& cfg, const Alphabet& alphabet,
                                 const std::vector<WeightedExample>& examples, int cap) {
  InductionTask task;
  task.alphabet = alphabet;
  task.examples = examples;
  task.max_intermediate_states = cap;
  task.length_cost = cfg.length_cost;
  task.guard_space = cfg.guard_space;
  task.budget_seconds = cfg.induction_budget;
  task.node_budget = cfg.induction_node_budget;
  ScoredHypothesis h = induce(task);
  if (h.suboptimal && cfg.strict_budget) {
    throw BudgetExhaustedError("induction budget exhausted after " + std::to_string(run.episode) + " episodes");
  }
  return h;
}

}  // namespace

void relearn(RunState& run, const InterleaveConfig& cfg, const Alphabet& alphabet) {
  if (run.pool.empty()) throw ContractViolation("relearn needs a non-empty example pool");
  const std::vector<WeightedExample> examples = consolidate(run.pool);
  const std::string old_text = format_machine(run.rm, alphabet);
  const bool first = run.relearns == 0;

  ScoredHypothesis h = induce_with_cap(run, cfg, alphabet, examples, run.max_states);
  if (!first && format_machine(h.machine, alphabet) == old_text && run.max_states < cfg.max_states_limit) {
    ++run.max_states;
    h = induce_with_cap(run, cfg, alphabet, examples, run.max_states);
  }
  ++run.relearns;
  run.step_cnt = 0;
  run.ce_sum = 0.0;
  if (format_machine(h.machine, alphabet) != old_text) {
    run.rm = std::move(h.machine);
    run.q.clear();
  }
}

EpisodeRecord interleave_step(RunState& run, const Environment& env, const InterleaveConfig& cfg,
                              const Alphabet& alphabet) {
  EpisodeResult ep = run_episode(run, env, cfg);
  EpisodeRecord rec;
  rec.episode = run.episode;
  rec.ret = ep.ret;
  rec.outcome = ep.outcome;
  rec.steps = ep.trace.size();
  rec.belief_terminated = ep.belief_terminated;

  if (run.learning) {
    for (std::size_t i = 0; i < cfg.samples_per_trace; ++i) {
      run.pool.push_back(sample_example(ep.trace, ep.outcome, run.rng, run.pool.size()));
    }
    for (auto& ex : incomplete_prefixes(ep.trace, run.rng, cfg.prefixes, run.pool.size())) {
      run.pool.push_back(std::move(ex));
    }
    rec.cross_entropy = recognize_belief(run.rm, ep.outcome, ep.final_belief);
    run.ce_sum += rec.cross_entropy;
    ++run.step_cnt;
    if (should_relearn(run, cfg)) {
      relearn(run, cfg, alphabet);
      rec.relearn = true;
    }
  }
  ++run.episode;
  rec.rm_states = run.rm.num_states();
  return rec;
}

void run_interleaved(RunState& run, const Environment& env, const InterleaveConfig& cfg, const Alphabet& alphabet,
                     const std::function<void(const EpisodeRecord&)>& on_episode, std::size_t checkpoint_every,
                     const std::string& checkpoint_path) {
  while (run.episode < cfg.num_episodes) {
    const EpisodeRecord rec = interleave_step(run, env, cfg, alphabet);
    if (on_episode) on_episode(rec);
    if (checkpoint_every > 0 && run.episode % checkpoint_every == 0 && !checkpoint_path.empty()) {
      const std::string tmp = checkpoint_path + ".tmp";
      {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write checkpoint " + tmp);
        write_checkpoint(out, run, alphabet);
      }
      std::rename(tmp.c_str(), checkpoint_path.c_str());
    }
  }
}

void write_checkpoint(std::ostream& out, const RunState& run, const Alphabet& alphabet) {
  out << "checkpoint 1\n";
  out << "episode " << run.episode << '\n';
  out << "global_steps " << run.global_steps << '\n';
  out << "step_cnt " << run.step_cnt << '\n';
  out << "ce_sum " << format_double(run.ce_sum) << '\n';
  out << "max_states " << run.max_states << '\n';
  out << "relearns " << run.relearns << '\n';
  out << "learning " << (run.learning ? 1 : 0) << '\n';
  out << "rng " << run.rng << '\n';
  out << "machine\n" << format_machine(run.rm, alphabet) << "end\n";
  out << "pool\n";
  write_pool(out, run.pool, alphabet);
  out << "end\nqtable\n";
  run.q.dump(out);
  out << "end\n";
}

namespace {

std::string read_block(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line) || line != name) throw ParseError("checkpoint: expected '" + name + "' section");
  std::string body;
  while (std::getline(in, line) && line != "end") body += line + '\n';
  return body;
}

template <typename T>
T read_field(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("checkpoint: missing field '" + name + "'");
  std::istringstream fields(line);
  std::string key;
  T value{};
  if (!(fields >> key) || key != name || !(fields >> value)) {
    throw ParseError("checkpoint: malformed field '" + name + "'");
  }
  return value;
}

}  // namespace

RunState read_checkpoint(std::istream& in, const Alphabet& alphabet) {
  if (read_field<int>(in, "checkpoint") != 1) throw ParseError("checkpoint: unsupported version");
  Alphabet names = alphabet;
  RunState run;
  run.episode = read_field<std::size_t>(in, "episode");
  run.global_steps = read_field<std::size_t>(in, "global_steps");
  run.step_cnt = read_field<std::size_t>(in, "step_cnt");
  run.ce_sum = parse_double(read_field<std::string>(in, "ce_sum"));
  run.max_states = read_field<int>(in, "max_states");
  run.relearns = read_field<std::size_t>(in, "relearns");
  run.learning = read_field<int>(in, "learning") != 0;
  {
    std::string line;
    std::getline(in, line);
    if (line.rfind("rng ", 0) != 0) throw ParseError("checkpoint: missing rng state");
    std::istringstream state(line.substr(4));
    if (!(state >> run.rng)) throw ParseError("checkpoint: malformed rng state");
  }
  run.rm = parse_machine(read_block(in, "machine"), names);
  std::istringstream pool(read_block(in, "pool"));
  run.pool = read_pool(pool, names);
  std::istringstream q(read_block(in, "qtable"));
  run.q = QTable::load(q);
  if (!(names == alphabet)) throw ParseError("checkpoint mentions propositions outside the alphabet");
  return run;
}

}  // namespace probirm
