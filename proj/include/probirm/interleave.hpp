#pragma once

// The interleaved learning loop: act under a belief over the current reward
// machine, collect sampled examples, and relearn the machine when its
// predictions stop matching episode outcomes.

#include "probirm/agent.hpp"
#include "probirm/example_pool.hpp"
#include "probirm/induction.hpp"
#include "probirm/machine.hpp"
#include "probirm/sensors.hpp"
#include "probirm/worlds.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace probirm {

enum class RelearnWhen { Above, Below };

struct InterleaveConfig {
  double gamma = 0.99;
  double alpha = 0.1;
  ExplorationSchedule exploration;
  int bin_decimals = 2;

  double beta = 0.1;
  std::size_t warmup = 50;  // episodes since the last relearn
  std::size_t max_ep_len = 500;
  std::size_t num_episodes = 5000;
  RelearnWhen relearn_when = RelearnWhen::Above;

  std::size_t samples_per_trace = 1;
  PrefixPolicy prefixes = PrefixPolicy::uniform(4);

  int initial_max_states = 1;  // intermediate states allowed at the first relearn
  int max_states_limit = 4;    // escalation never goes beyond this
  double induction_budget = 60.0;          // seconds
  std::size_t induction_node_budget = 0;  // search nodes, 0 disables
  bool strict_budget = false;  // throw BudgetExhaustedError on a suboptimal induction
  LengthCost length_cost = LengthCost::EdgePlusLiterals;
  GuardSpace guard_space = GuardSpace::Full;

  bool shaping = true;
  // Unreachable states get potential -shaping_floor_scale * |U|.
  double shaping_floor_scale = 10.0;
  std::optional<double> threshold;  // crisp thresholded labels instead of beliefs
};

/// Environment side of a replica: map, ground-truth task and sensors.
struct Environment {
  GridMap map;
  RewardMachine task = RewardMachine::loop_machine();
  SensorBank sensors;
};

struct EpisodeRecord {
  std::size_t episode = 0;
  double ret = 0.0;  // undiscounted environment return
  TraceOutcome outcome = TraceOutcome::Incomplete;
  bool relearn = false;
  int rm_states = 0;  // states of the machine in use after the episode
  std::size_t steps = 0;
  double cross_entropy = 0.0;
  bool belief_terminated = false;
};

struct RunState {
  RewardMachine rm = RewardMachine::loop_machine();
  std::vector<WeightedExample> pool;  // raw, consolidated at relearn time
  std::size_t step_cnt = 0;           // episodes since the last relearn
  double ce_sum = 0.0;
  int max_states = 1;
  std::size_t relearns = 0;
  std::size_t episode = 0;       // episodes finished
  std::size_t global_steps = 0;  // agent steps, drives exploration
  bool learning = true;          // false for the fixed-machine baseline
  QTable q;
  Rng rng;
};

RunState make_run_state(const InterleaveConfig& cfg, std::uint64_t seed);
RunState make_baseline_state(const RewardMachine& task, std::uint64_t seed);

struct EpisodeResult {
  NoisyTrace trace;
  TraceOutcome outcome = TraceOutcome::Incomplete;
  double ret = 0.0;
  Eigen::VectorXd final_belief;
  bool belief_terminated = false;
};

/// Potential used for shaping, with unreachable states at
/// -floor_scale * |U|. Zero everywhere when the machine cannot reach its
/// accepting state from the initial state, so that an uninformative machine
/// does not reward stalling.
Eigen::VectorXd episode_potential(const RewardMachine& rm, double floor_scale = 10.0);

/// One episode under `run.rm`. Updates the Q-table and the step counter.
EpisodeResult run_episode(RunState& run, const Environment& env, const InterleaveConfig& cfg);

/// Categorical cross-entropy between (b[uA], b[uR], rest) and the outcome;
/// probabilities are clamped to [1e-10, 1].
double recognize_belief(const RewardMachine& rm, TraceOutcome outcome, const Eigen::VectorXd& belief);

bool should_relearn(const RunState& run, const InterleaveConfig& cfg);

/// Induces a new machine from the pool and resets the conformance counters.
/// If the result equals the current machine, the state cap grows by one and
/// induction runs once more. The Q-table is cleared when the machine changes.
void relearn(RunState& run, const InterleaveConfig& cfg, const Alphabet& alphabet);

/// Runs one full episode of the loop: act, record examples, track
/// cross-entropy and relearn when due.
EpisodeRecord interleave_step(RunState& run, const Environment& env, const InterleaveConfig& cfg,
                              const Alphabet& alphabet);

/// Runs until `cfg.num_episodes` episodes have finished, calling `on_episode`
/// after each. `checkpoint_every` > 0 writes a checkpoint to `checkpoint_path`
/// at that period.
void run_interleaved(RunState& run, const Environment& env, const InterleaveConfig& cfg, const Alphabet& alphabet,
                     const std::function<void(const EpisodeRecord&)>& on_episode, std::size_t checkpoint_every = 0,
                     const std::string& checkpoint_path = {});

// Checkpoint: machine, example pool, Q-table, counters and RNG state.
void write_checkpoint(std::ostream& out, const RunState& run, const Alphabet& alphabet);
RunState read_checkpoint(std::istream& in, const Alphabet& alphabet);

}  // namespace probirm
