// Command-line front end: experiments, baselines, standalone induction,
// machine comparison and curve re-aggregation.

#include "probirm/config.hpp"
#include "probirm/error.hpp"
#include "probirm/harness.hpp"
#include "probirm/induction.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace probirm;

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kBudget = 3 };

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

RewardMachine load_machine(const std::string& path) {
  Alphabet names = office::alphabet();
  return parse_machine(slurp(path), names);
}

/// Accepts either example lines (`G;penalty;steps`) or trace lines
/// (`G;steps`). Noisy trace steps are sampled once with `rng`.
std::vector<WeightedExample> load_examples(const std::string& path, Alphabet& alphabet, Rng& rng) {
  std::istringstream in(slurp(path));
  std::vector<WeightedExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (std::count(line.begin(), line.end(), ';') >= 2) {
      out.push_back(parse_example(line, alphabet));
    } else {
      TraceRecord rec = parse_trace_line(line, alphabet);
      NoisyTrace steps = rec.steps;
      resize_to_alphabet(steps, alphabet.size());
      out.push_back(sample_example(steps, rec.outcome, rng, out.size()));
    }
    out.back().id = out.size() - 1;
  }
  return out;
}

void print_summary(const ExperimentSummary& summary) {
  const auto& last = summary.curve.back();
  std::cout << "episodes " << summary.curve.size() << ", replicas " << summary.results.size()
            << ", final smoothed return " << last.smoothed_mean << " (std " << last.smoothed_std << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward machine learning from noisy labels in OfficeWorld"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool resume = false;

  auto add_experiment = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--seed", seed, "run a single seed instead of the configured list");
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    cmd->add_option("--workers", workers, "replicas run concurrently");
    cmd->add_flag("--resume", resume, "continue from checkpoints in the output directory");
  };
  CLI::App* run = app.add_subcommand("run", "learn reward machines while acting");
  add_experiment(run);
  CLI::App* baseline = app.add_subcommand("baseline", "act with the handcrafted task machine");
  add_experiment(baseline);

  CLI::App* induce_cmd = app.add_subcommand("induce", "induce a machine from an example or trace file");
  std::string examples_path;
  int max_states = 1;
  double budget = 60.0;
  std::string length_cost = "edges_and_literals";
  std::string guard_space = "full";
  std::size_t node_budget = 0;
  std::uint64_t induce_seed = 0;
  induce_cmd->add_option("--examples", examples_path, "example or trace file")->required();
  induce_cmd->add_option("--max-states", max_states, "intermediate states allowed")->capture_default_str();
  induce_cmd->add_option("--budget", budget, "time budget in seconds")->capture_default_str();
  induce_cmd->add_option("--length-cost", length_cost)
      ->check(CLI::IsMember({"edges_and_literals", "literals"}))
      ->capture_default_str();
  induce_cmd->add_option("--guard-space", guard_space)->check(CLI::IsMember({"full", "observed"}))->capture_default_str();
  induce_cmd->add_option("--node-budget", node_budget, "search nodes, 0 for no limit")->capture_default_str();
  induce_cmd->add_option("--seed", induce_seed, "seed for sampling noisy trace steps")->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval-rm", "outcome agreement of two machines");
  std::string rm_a;
  std::string rm_b;
  std::string traces_path;
  std::size_t walks = 1000;
  std::size_t walk_length = 50;
  std::uint64_t eval_seed = 0;
  eval->add_option("first", rm_a, "machine file")->required();
  eval->add_option("second", rm_b, "machine file")->required();
  eval->add_option("--traces", traces_path, "trace file; random walks on the canonical map if omitted");
  eval->add_option("--walks", walks, "number of random walks")->capture_default_str();
  eval->add_option("--walk-length", walk_length, "maximum random walk length")->capture_default_str();
  eval->add_option("--seed", eval_seed)->capture_default_str();

  CLI::App* curves = app.add_subcommand("curves", "re-aggregate raw CSVs");
  std::string in_dir;
  std::string curve_out;
  curves->add_option("--in", in_dir, "directory holding replica_<i>.csv files")->required();
  curves->add_option("--out", curve_out, "aggregate CSV path; standard output if omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (run->parsed() || baseline->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (seed) cfg.seeds = {*seed};
      if (workers) cfg.workers = std::max<std::size_t>(*workers, 1);
      ExperimentOptions options;
      options.mode = baseline->parsed() ? Mode::Baseline : Mode::ProbIrm;
      options.resume = resume;
      options.log = [](const std::string& line) { std::cerr << line << std::endl; };
      print_summary(run_experiment(cfg, out_dir, options));
    } else if (induce_cmd->parsed()) {
      Alphabet alphabet = office::alphabet();
      Rng rng(induce_seed);
      InductionTask task;
      task.examples = consolidate(load_examples(examples_path, alphabet, rng));
      task.alphabet = alphabet;
      task.max_intermediate_states = max_states;
      task.budget_seconds = budget;
      task.node_budget = node_budget;
      task.length_cost = length_cost == "literals" ? LengthCost::LiteralsOnly : LengthCost::EdgePlusLiterals;
      task.guard_space = guard_space == "observed" ? GuardSpace::Observed : GuardSpace::Full;
      const ScoredHypothesis h = induce(task);
      std::cout << format_machine(h.machine, alphabet);
      std::cout << "# score " << format_double(h.score) << " length " << format_double(h.length) << " penalty "
                << format_double(h.penalty) << " nodes " << h.nodes << (h.suboptimal ? " suboptimal" : " optimal")
                << '\n';
    } else if (eval->parsed()) {
      const RewardMachine a = load_machine(rm_a);
      const RewardMachine b = load_machine(rm_b);
      std::vector<SymbolicTrace> traces;
      if (!traces_path.empty()) {
        Alphabet names = office::alphabet();
        std::istringstream in(slurp(traces_path));
        for (const auto& rec : read_traces(in, names)) traces.push_back(rec.symbolic());
      } else {
        Rng rng(eval_seed);
        const GridMap map = GridMap::canonical();
        std::uniform_int_distribution<std::size_t> length(1, std::max<std::size_t>(walk_length, 1));
        for (std::size_t i = 0; i < walks; ++i) traces.push_back(random_walk(map, length(rng), rng));
      }
      const double agreement = outcome_agreement(a, b, traces);
      std::cout << "agreement " << 100.0 * agreement << "% over " << traces.size() << " traces\n";
    } else if (curves->parsed()) {
      const auto rows = curves_from_files(raw_files_in(in_dir));
      if (curve_out.empty()) {
        write_aggregate_csv(std::cout, rows);
      } else {
        std::ofstream out(curve_out);
        if (!out) throw Error("cannot write " + curve_out);
        write_aggregate_csv(out, rows);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const BudgetExhaustedError& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
