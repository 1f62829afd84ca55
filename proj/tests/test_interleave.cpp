#include "probirm/error.hpp"
#include "probirm/harness.hpp"
#include "probirm/interleave.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace probirm;

namespace {

Environment coffee_env(double first_posterior = 1.0) {
  Environment env;
  env.map = GridMap::canonical();
  env.task = make_task("coffee");
  const Label noisy = first_event_propositions("coffee");
  for (PropId p = 0; p < office::alphabet().size(); ++p) {
    const double prior = env.map.occupancy_prior(p);
    env.sensors.push_back(noisy.contains(p) && first_posterior < 1.0
                              ? SensorSpec::with_confidence(solve_confidence(prior, first_posterior), prior)
                              : SensorSpec{1.0, 1.0, prior});
  }
  return env;
}

InterleaveConfig small_config() {
  InterleaveConfig cfg;
  cfg.max_ep_len = 100;
  cfg.num_episodes = 120;
  cfg.warmup = 20;
  cfg.induction_budget = 10;
  cfg.max_states_limit = 2;
  return cfg;
}

Eigen::VectorXd belief(std::initializer_list<double> values) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) b[i++] = v;
  return b;
}

std::string dump(const QTable& q) {
  std::ostringstream out;
  q.dump(out);
  return out.str();
}

}  // namespace

TEST_CASE("episode potential") {
  const RewardMachine coffee = make_task("coffee");
  const Eigen::VectorXd phi = episode_potential(coffee, 10.0);
  CHECK(phi[0] == 3.0);
  CHECK(phi[1] == 3.0);
  CHECK(phi[2] == 4.0);
  CHECK(phi[3] == -40.0);
  CHECK(episode_potential(coffee, 1.0)[3] == -4.0);
  CHECK(episode_potential(RewardMachine::loop_machine()).isZero());
}

TEST_CASE("episodes stop at the length cap") {
  const Environment env = coffee_env();
  InterleaveConfig cfg = small_config();
  cfg.max_ep_len = 5;
  RunState run = make_run_state(cfg, 3);
  for (int i = 0; i < 30; ++i) {
    const EpisodeResult ep = run_episode(run, env, cfg);
    CHECK(ep.trace.size() <= 5);
    if (ep.trace.size() < 5) CHECK(ep.outcome != TraceOutcome::Incomplete);
  }
  CHECK(run.global_steps > 0);
}

TEST_CASE("a scripted Q-table reaches the goal") {
  const Environment env = coffee_env();
  const std::vector<Action> plan = probirm::testing::coffee_plan(env.map);
  REQUIRE_FALSE(plan.empty());
  InterleaveConfig cfg = small_config();
  cfg.alpha = 0.0;
  cfg.exploration = {0.0, 0.0, 0};
  RunState run = make_baseline_state(env.task, 1);
  // Greedy values along the plan, keyed by the belief the agent will hold.
  Cell c = env.map.start();
  Eigen::VectorXd b = initial_belief(run.rm);
  for (Action a : plan) {
    run.q.at(QKey{env.map.cell_index(c), bin_belief(b, cfg.bin_decimals)})[static_cast<std::size_t>(a)] = 1.0;
    c = env.map.move(c, a);
    b = belief_step(run.rm, b, ProbLabel::certain(env.map.label_at(c), office::alphabet().size()));
  }
  const EpisodeResult ep = run_episode(run, env, cfg);
  CHECK(ep.outcome == TraceOutcome::Goal);
  CHECK(ep.ret == 1.0);
  CHECK(ep.trace.size() == plan.size());
  CHECK(ep.final_belief[run.rm.accepting()] == 1.0);
  CHECK_FALSE(ep.belief_terminated);
}

TEST_CASE("outcome cross-entropy") {
  const RewardMachine coffee = make_task("coffee");
  CHECK(recognize_belief(coffee, TraceOutcome::Goal, belief({0, 0, 1, 0})) == 0.0);
  CHECK(recognize_belief(coffee, TraceOutcome::Goal, belief({0.5, 0, 0.5, 0})) == doctest::Approx(0.693147));
  CHECK(recognize_belief(coffee, TraceOutcome::Goal, belief({1, 0, 0, 0})) == doctest::Approx(23.02585));
  CHECK(recognize_belief(coffee, TraceOutcome::DeadEnd, belief({0.2, 0, 0, 0.8})) == doctest::Approx(-std::log(0.8)));
  CHECK(recognize_belief(coffee, TraceOutcome::Incomplete, belief({0.3, 0.3, 0.2, 0.2})) ==
        doctest::Approx(-std::log(0.6)));
}

TEST_CASE("relearn trigger") {
  InterleaveConfig cfg = small_config();
  RunState run = make_run_state(cfg, 0);
  run.step_cnt = 19;
  run.ce_sum = 100.0;
  CHECK_FALSE(should_relearn(run, cfg));
  run.step_cnt = 20;
  CHECK(should_relearn(run, cfg));
  run.ce_sum = 20 * 0.1;
  CHECK_FALSE(should_relearn(run, cfg));
  cfg.relearn_when = RelearnWhen::Below;
  run.ce_sum = 20 * 0.05;
  CHECK(should_relearn(run, cfg));
  cfg.warmup = 0;
  run.step_cnt = 0;
  CHECK_FALSE(should_relearn(run, cfg));
}

TEST_CASE("relearn replaces the machine and escalates on a repeat") {
  const Environment env = coffee_env();
  InterleaveConfig cfg = small_config();
  RunState run = make_run_state(cfg, 0);
  CHECK_THROWS_AS(relearn(run, cfg, office::alphabet()), ContractViolation);

  Rng rng(4);
  for (std::size_t i = 0; i < 80; ++i) {
    const LabelledTrace t = labelled_walk(env.map, env.task, 60, rng);
    run.pool.push_back({i, 1.0, t.outcome, compress(t.trace)});
  }
  run.q.at(QKey{0, {100}}) = {1, 2, 3, 4};
  run.step_cnt = 30;
  run.ce_sum = 9.0;
  relearn(run, cfg, office::alphabet());
  CHECK(run.relearns == 1);
  CHECK(run.step_cnt == 0);
  CHECK(run.ce_sum == 0.0);
  CHECK(run.max_states == 1);
  CHECK(run.rm.num_states() > 1);
  CHECK(run.q.size() == 0);

  // Same pool: the machine repeats, so the cap grows and induction reruns.
  const RewardMachine first = run.rm;
  run.q.at(QKey{0, {100}}) = {1, 2, 3, 4};
  relearn(run, cfg, office::alphabet());
  CHECK(run.max_states == 2);
  CHECK((run.rm == first) == (run.q.size() == 1));

  relearn(run, cfg, office::alphabet());
  CHECK(run.max_states == 2);
  CHECK(run.relearns == 3);
}

TEST_CASE("the baseline never learns") {
  const Environment env = coffee_env(0.9);
  InterleaveConfig cfg = small_config();
  cfg.num_episodes = 40;
  RunState run = make_baseline_state(env.task, 7);
  std::size_t seen = 0;
  run_interleaved(run, env, cfg, office::alphabet(), [&](const EpisodeRecord& r) {
    CHECK(r.episode == seen++);
    CHECK_FALSE(r.relearn);
    CHECK(r.rm_states == 4);
  });
  CHECK(seen == 40);
  CHECK(run.pool.empty());
  CHECK(run.rm == env.task);
}

TEST_CASE("thresholded beliefs stay one-hot") {
  const Environment env = coffee_env(0.8);
  InterleaveConfig cfg = small_config();
  cfg.threshold = 0.7;
  RunState run = make_baseline_state(env.task, 2);
  for (int i = 0; i < 20; ++i) {
    const EpisodeResult ep = run_episode(run, env, cfg);
    CHECK(ep.final_belief.sum() == 1.0);
    CHECK(ep.final_belief.maxCoeff() == 1.0);
  }
}

TEST_CASE("checkpoints round-trip") {
  const Environment env = coffee_env(0.9);
  const InterleaveConfig cfg = small_config();
  RunState run = make_run_state(cfg, 11);
  run_interleaved(run, env, cfg, office::alphabet(), {});
  std::stringstream text;
  write_checkpoint(text, run, office::alphabet());
  const std::string first = text.str();
  const RunState back = read_checkpoint(text, office::alphabet());
  CHECK(back.episode == run.episode);
  CHECK(back.global_steps == run.global_steps);
  CHECK(back.step_cnt == run.step_cnt);
  CHECK(back.ce_sum == run.ce_sum);
  CHECK(back.max_states == run.max_states);
  CHECK(back.relearns == run.relearns);
  CHECK(back.learning == run.learning);
  CHECK(back.rng == run.rng);
  CHECK(back.rm == run.rm);
  CHECK(back.pool == run.pool);
  CHECK(back.q == run.q);
  std::ostringstream again;
  write_checkpoint(again, back, office::alphabet());
  CHECK(again.str() == first);

  std::istringstream bad("checkpoint 2\n");
  CHECK_THROWS_AS(read_checkpoint(bad, office::alphabet()), ParseError);
  std::istringstream cut(first.substr(0, first.size() / 2));
  CHECK_THROWS(read_checkpoint(cut, office::alphabet()));
}

TEST_CASE("resuming from a checkpoint continues the same run") {
  const Environment env = coffee_env(0.9);
  InterleaveConfig cfg = small_config();
  cfg.num_episodes = 160;

  std::vector<EpisodeRecord> straight;
  RunState a = make_run_state(cfg, 5);
  run_interleaved(a, env, cfg, office::alphabet(), [&](const EpisodeRecord& r) { straight.push_back(r); });

  InterleaveConfig half = cfg;
  half.num_episodes = 70;
  std::vector<EpisodeRecord> resumed;
  RunState b = make_run_state(cfg, 5);
  run_interleaved(b, env, half, office::alphabet(), [&](const EpisodeRecord& r) { resumed.push_back(r); });
  std::stringstream text;
  write_checkpoint(text, b, office::alphabet());
  RunState c = read_checkpoint(text, office::alphabet());
  run_interleaved(c, env, cfg, office::alphabet(), [&](const EpisodeRecord& r) { resumed.push_back(r); });

  REQUIRE(resumed.size() == straight.size());
  for (std::size_t i = 0; i < straight.size(); ++i) {
    CHECK(resumed[i].episode == straight[i].episode);
    CHECK(resumed[i].ret == straight[i].ret);
    CHECK(resumed[i].outcome == straight[i].outcome);
    CHECK(resumed[i].relearn == straight[i].relearn);
    CHECK(resumed[i].steps == straight[i].steps);
    CHECK(resumed[i].cross_entropy == straight[i].cross_entropy);
  }
  CHECK(a.relearns > 0);
  CHECK(c.rm == a.rm);
  CHECK(dump(c.q) == dump(a.q));
  CHECK(c.rng == a.rng);
}

TEST_CASE("checkpoint files are written at the period") {
  const Environment env = coffee_env();
  InterleaveConfig cfg = small_config();
  cfg.num_episodes = 25;
  const std::string path = "interleave_test.ckpt";
  std::remove(path.c_str());
  RunState run = make_run_state(cfg, 1);
  std::size_t last_episode_in_file = 0;
  run_interleaved(run, env, cfg, office::alphabet(), {}, 10, path);
  std::ifstream in(path);
  REQUIRE(in);
  last_episode_in_file = read_checkpoint(in, office::alphabet()).episode;
  CHECK(last_episode_in_file == 20);
  std::remove(path.c_str());
}
