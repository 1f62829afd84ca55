#include "probirm/config.hpp"
#include "probirm/error.hpp"
#include "probirm/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace probirm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "no error";
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

ExperimentConfig small_experiment() {
  return parse(
      "[experiment]\nseeds = 1-3\nepisodes = 80\nmax_episode_length = 60\n"
      "[noise]\ntargets = first\nposterior = 0.9\n"
      "[interleave]\nwarmup = 20\n[induction]\nbudget = 10\nmax_states_limit = 2\n");
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("probirm_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config defaults") {
  const ExperimentConfig cfg = parse("");
  CHECK(cfg.task == "coffee");
  CHECK(cfg.map == MapKind::Canonical);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
  CHECK(cfg.noise.targets == NoiseTargets::First);
  CHECK(cfg.noise.posterior == 0.9);
  CHECK(cfg.loop.num_episodes == 5000);
  CHECK(cfg.loop.max_ep_len == 500);
  CHECK(cfg.loop.shaping);
}

TEST_CASE("config values") {
  const ExperimentConfig cfg = parse(
      "# comment\n[experiment]\ntask = visitabcd\nmap = random\nmaps = 3\nseeds = 4, 7-9\nmaster_seed = 12\n"
      "workers = 2\ncheckpoint_every = 50\n"
      "[noise]\ntargets = coffee, office\nsensitivity = 0.8\nspecificity = 0.95\n"
      "[priors]\ncoffee = 0.1\n"
      "[agent]\ngamma = 0.9\nalpha = 0.5\nepsilon_start = 0.8\nepsilon_end = 0.05\nepsilon_decay_steps = 100\n"
      "bin_decimals = 1\nshaping = off\nshaping_floor_scale = 2\nthreshold = 0.7\n"
      "[interleave]\nbeta = 0.4\nwarmup = 10\nrelearn_when = below\nsamples_per_trace = 2\nprefixes = all\n"
      "[induction]\ninitial_max_states = 2\nmax_states_limit = 3\nbudget = 5\nstrict = yes\n"
      "length_cost = literals\nguard_space = observed\n");
  CHECK(cfg.task == "visitabcd");
  CHECK(cfg.map == MapKind::Random);
  CHECK(cfg.maps == 3);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 7, 8, 9});
  CHECK(cfg.master_seed == 12);
  CHECK(cfg.workers == 2);
  CHECK(cfg.checkpoint_every == 50);
  CHECK(cfg.noise.targets == NoiseTargets::List);
  CHECK_FALSE(cfg.noise.posterior.has_value());
  CHECK(cfg.noise.sensitivity == 0.8);
  CHECK(cfg.noise.priors.at("coffee") == 0.1);
  CHECK(noisy_propositions(cfg) == Label{office::kCoffee, office::kOffice});
  CHECK(cfg.loop.gamma == 0.9);
  CHECK(cfg.loop.exploration.decay_steps == 100);
  CHECK(cfg.loop.bin_decimals == 1);
  CHECK_FALSE(cfg.loop.shaping);
  CHECK(cfg.loop.shaping_floor_scale == 2.0);
  CHECK(cfg.loop.threshold == 0.7);
  CHECK(cfg.loop.relearn_when == RelearnWhen::Below);
  CHECK(cfg.loop.prefixes.kind == PrefixPolicy::Kind::All);
  CHECK(cfg.loop.max_states_limit == 3);
  CHECK(cfg.loop.strict_budget);
  CHECK(cfg.loop.length_cost == LengthCost::LiteralsOnly);
  CHECK(cfg.loop.guard_space == GuardSpace::Observed);

  const SensorBank bank = make_sensor_bank(cfg, GridMap::canonical());
  CHECK(bank[office::kCoffee].sensitivity == 0.8);
  CHECK(bank[office::kCoffee].prior == 0.1);
  CHECK(bank[office::kOffice].specificity == 0.95);
  CHECK(bank[office::kMail].sensitivity == 1.0);
}

TEST_CASE("config errors name the field") {
  CHECK(config_error("[experiment]\nepisodes = ten\n").find("experiment.episodes") == 0);
  CHECK(config_error("[experiment]\nepisodes = 0\n").find("experiment.episodes") == 0);
  CHECK(config_error("[experiment]\ncolour = red\n") == "experiment.colour: unknown key");
  CHECK(config_error("[weather]\nrain = 1\n") == "weather: unknown section");
  CHECK(config_error("[experiment]\ntask = tea\n").find("experiment.task") == 0);
  CHECK(config_error("[experiment]\nmap = file\n").find("experiment.map_file") == 0);
  CHECK(config_error("[experiment]\nmaps = 3\n").find("experiment.maps") == 0);
  CHECK(config_error("[experiment]\nseeds = 5-2\n").find("experiment.seeds") == 0);
  CHECK(config_error("[noise]\nposterior = 1.5\n").find("noise.posterior") == 0);
  CHECK(config_error("[noise]\nposterior = 0\n").find("noise.posterior") == 0);
  CHECK(config_error("[noise]\nposterior = 0.9\nconfidence = 0.9\n").find("noise") == 0);
  CHECK(config_error("[noise]\nsensitivity = 0.9\n").find("noise") == 0);
  CHECK(config_error("[noise]\ntargets = coffee, tea\n").find("noise.targets") == 0);
  CHECK(config_error("[priors]\ntea = 0.5\n") == "priors.tea: unknown key");
  CHECK(config_error("[agent]\nshaping = maybe\n").find("agent.shaping") == 0);
  CHECK(config_error("[agent]\nbin_decimals = 5\n").find("agent.bin_decimals") == 0);
  CHECK(config_error("[interleave]\nrelearn_when = sometimes\n").find("interleave.relearn_when") == 0);
  CHECK(config_error("[induction]\ninitial_max_states = 3\nmax_states_limit = 2\n").find("induction.max_states_limit") ==
        0);
  CHECK(config_error("[induction]\nlength_cost = bytes\n").find("induction.length_cost") == 0);
  CHECK(config_error("[experiment\n").find("line 1") == 0);
  CHECK_THROWS_AS(load_config("/nonexistent/probirm.ini"), ConfigError);
}

TEST_CASE("smoothing and aggregation") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(smooth(v, 2) == std::vector<double>{1, 1.5, 2.5, 3.5, 4.5});
  CHECK(smooth(v, 10) == std::vector<double>{1, 1.5, 2, 2.5, 3});
  CHECK_THROWS_AS(smooth(v, 0), ContractViolation);

  const std::vector<std::vector<double>> returns{{0, 1, 1}, {1, 1, 0}};
  const auto rows = aggregate(returns, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_return == 0.5);
  CHECK(rows[0].std_return == 0.5);
  CHECK(rows[1].mean_return == 1.0);
  CHECK(rows[1].std_return == 0.0);
  CHECK(rows[1].smoothed_mean == 0.75);
  CHECK(rows[1].smoothed_std == 0.25);
  CHECK(rows[2].smoothed_mean == 0.75);
  CHECK(rows[2].smoothed_std == 0.25);
  CHECK_THROWS_AS(aggregate({{1, 2}, {1}}), ContractViolation);

  std::vector<double> ramp(300, 0.0);
  for (std::size_t e = 150; e < 300; ++e) ramp[e] = 1.0;
  // The window [e-99, e] holds e-149 ones.
  CHECK(first_episode_reaching(ramp, 0.5) == 199);
  CHECK(first_episode_reaching(ramp, 1.0) == 249);
  CHECK(first_episode_reaching(std::vector<double>(50, 1.0), 0.5) == -1);
}

TEST_CASE("raw CSV round-trips") {
  std::vector<EpisodeRecord> records;
  for (std::size_t e = 0; e < 20; ++e) {
    EpisodeRecord r;
    r.episode = e;
    r.ret = e % 3 == 0 ? 1.0 : 0.0;
    r.outcome = static_cast<TraceOutcome>(e % 3);
    r.relearn = e % 7 == 0;
    r.rm_states = 3 + static_cast<int>(e % 2);
    r.steps = 10 * e;
    records.push_back(r);
  }
  std::stringstream text;
  write_raw_csv(text, records);
  const auto back = read_raw_csv(text);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].episode == records[i].episode);
    CHECK(back[i].ret == records[i].ret);
    CHECK(back[i].outcome == records[i].outcome);
    CHECK(back[i].relearn == records[i].relearn);
    CHECK(back[i].rm_states == records[i].rm_states);
    CHECK(back[i].steps == records[i].steps);
  }
  std::istringstream bad("episode,return\n");
  CHECK_THROWS_AS(read_raw_csv(bad), ParseError);
}

TEST_CASE("replicas are seed-major and seeds are mixed") {
  ExperimentConfig cfg = parse("[experiment]\nmap = random\nmaps = 2\nseeds = 5,6\nmaster_seed = 3\n");
  const auto reps = replicas(cfg);
  REQUIRE(reps.size() == 4);
  CHECK(reps[1].seed == 5);
  CHECK(reps[1].map_index == 1);
  CHECK(reps[2].seed == 6);
  CHECK(reps[2].map_index == 0);
  CHECK(replica_seed(cfg, reps[0]) != replica_seed(cfg, reps[1]));
  CHECK(replica_map(cfg, 0) == replica_map(cfg, 0));
  CHECK_FALSE(replica_map(cfg, 0) == replica_map(cfg, 1));
  ExperimentConfig other = cfg;
  other.master_seed = 4;
  CHECK(replica_seed(other, reps[0]) != replica_seed(cfg, reps[0]));
  CHECK_FALSE(replica_map(other, 0) == replica_map(cfg, 0));
}

TEST_CASE("classification and agreement") {
  const RewardMachine coffee = make_task("coffee");
  using office::kCoffee;
  using office::kOffice;
  CHECK(classify(coffee, {Label{kCoffee}, Label{kOffice}}) == TraceOutcome::Goal);
  CHECK(classify(coffee, {Label{office::kDecoration}}) == TraceOutcome::DeadEnd);
  CHECK(classify(coffee, {Label{kOffice}}) == TraceOutcome::Incomplete);
  const std::vector<SymbolicTrace> traces{{Label{kCoffee}, Label{kOffice}}, {Label{kOffice}}};
  CHECK(outcome_agreement(coffee, coffee, traces) == 1.0);
  CHECK(outcome_agreement(coffee, RewardMachine::loop_machine(), traces) == 0.5);
}

TEST_CASE("walks") {
  const GridMap map = GridMap::canonical();
  const RewardMachine coffee = make_task("coffee");
  Rng rng(6);
  CHECK(random_walk(map, 17, rng).size() == 17);
  for (int i = 0; i < 200; ++i) {
    const LabelledTrace t = labelled_walk(map, coffee, 40, rng);
    CHECK(t.trace.size() <= 40);
    CHECK(classify(coffee, t.trace) == t.outcome);
    const auto states = traverse(coffee, t.trace);
    // The walk stops at the first terminal event.
    for (std::size_t j = 1; j + 1 < states.size(); ++j) CHECK_FALSE(coffee.is_sink(states[j]));
  }
}

TEST_CASE("experiments are reproducible and independent of worker count") {
  ExperimentConfig cfg = small_experiment();
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  const ExperimentSummary first = run_experiment(cfg, a);
  cfg.workers = 3;
  run_experiment(cfg, b);
  for (const std::string name : {"replica_0.csv", "replica_1.csv", "replica_2.csv", "replica_0.rm", "aggregate.csv"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(first.curve.size() == 80);
  CHECK(fs::exists(a / "timing.csv"));

  // Re-aggregating the raw files reproduces the aggregate byte for byte.
  std::ostringstream again;
  write_aggregate_csv(again, curves_from_files(raw_files_in(a)));
  CHECK(again.str() == slurp(a / "aggregate.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("resuming an experiment matches an uninterrupted run") {
  ExperimentConfig cfg = small_experiment();
  cfg.seeds = {2};
  const fs::path straight = fresh_dir("straight");
  const fs::path resumed = fresh_dir("resumed");
  run_experiment(cfg, straight);

  ExperimentConfig part = cfg;
  part.loop.num_episodes = 40;
  part.checkpoint_every = 20;
  run_experiment(part, resumed);
  CHECK(fs::exists(resumed / "replica_0.ckpt"));
  ExperimentConfig rest = cfg;
  rest.checkpoint_every = 20;
  ExperimentOptions options;
  options.resume = true;
  run_experiment(rest, resumed, options);
  CHECK(slurp(straight / "replica_0.csv") == slurp(resumed / "replica_0.csv"));
  CHECK(slurp(straight / "replica_0.rm") == slurp(resumed / "replica_0.rm"));
  fs::remove_all(straight);
  fs::remove_all(resumed);
}

TEST_CASE("baseline mode keeps the task machine") {
  ExperimentConfig cfg = small_experiment();
  cfg.seeds = {1};
  const fs::path dir = fresh_dir("baseline");
  ExperimentOptions options;
  options.mode = Mode::Baseline;
  const ExperimentSummary s = run_experiment(cfg, dir, options);
  CHECK(s.results[0].final_machine == make_task("coffee"));
  CHECK(s.results[0].relearns == 0);
  fs::remove_all(dir);
}
