#pragma once

// Experiment execution: replicas over seeds and maps, per-replica CSVs,
// aggregate learning curves, and RM comparison utilities.

#include "probirm/config.hpp"
#include "probirm/interleave.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace probirm {

enum class Mode { ProbIrm, Baseline };

struct Replica {
  std::size_t index = 0;  // position in seed-major order
  std::uint64_t seed = 0;
  std::size_t map_index = 0;
};

/// seeds x maps, seed-major.
std::vector<Replica> replicas(const ExperimentConfig& cfg);

/// The map a replica runs on. Random maps depend only on the master seed and
/// the map index, so every seed sees the same set of maps.
GridMap replica_map(const ExperimentConfig& cfg, std::size_t map_index);

/// Seed of the replica's generator, mixed from (master seed, seed, map index).
std::uint64_t replica_seed(const ExperimentConfig& cfg, const Replica& replica);

Environment make_environment(const ExperimentConfig& cfg, std::size_t map_index);

struct ReplicaResult {
  Replica replica;
  std::vector<EpisodeRecord> records;
  RewardMachine final_machine = RewardMachine::loop_machine();
  double seconds = 0.0;
  std::size_t relearns = 0;
};

/// Runs one replica to completion. With `checkpoint_path` set, the run resumes
/// from an existing checkpoint there, taking the episodes before it from
/// `resume_records`, and writes a checkpoint every `cfg.checkpoint_every`
/// episodes together with the records so far (`<checkpoint>.records`).
ReplicaResult run_replica(const ExperimentConfig& cfg, const Replica& replica, Mode mode,
                          const std::string& checkpoint_path = {},
                          std::vector<EpisodeRecord> resume_records = {});

struct CurveRow {
  std::size_t episode = 0;
  double mean_return = 0.0;
  double std_return = 0.0;  // population standard deviation across replicas
  double smoothed_mean = 0.0;
  double smoothed_std = 0.0;
};

inline constexpr std::size_t kSmoothingWindow = 100;

/// Per-episode mean and standard deviation across replicas, then trailing
/// moving averages of both over `window` episodes (shorter at the start).
/// Replicas must have equal length.
std::vector<CurveRow> aggregate(const std::vector<std::vector<double>>& returns,
                                std::size_t window = kSmoothingWindow);

/// Trailing moving average, window truncated at the start.
std::vector<double> smooth(const std::vector<double>& values, std::size_t window = kSmoothingWindow);

/// First episode whose window-100 smoothed return reaches `level`, computed
/// only once a full window is available; -1 if never.
long first_episode_reaching(const std::vector<double>& returns, double level,
                            std::size_t window = kSmoothingWindow);

// Raw CSV: episode,return,outcome,relearn,rm_states,steps
void write_raw_csv(std::ostream& out, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_raw_csv(std::istream& in);
// Aggregate CSV: episode,mean_return,std_return,smoothed_mean,smoothed_std
void write_aggregate_csv(std::ostream& out, const std::vector<CurveRow>& rows);

struct ExperimentOptions {
  Mode mode = Mode::ProbIrm;
  bool resume = false;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

struct ExperimentSummary {
  std::vector<ReplicaResult> results;  // in replica order
  std::vector<CurveRow> curve;
};

/// Runs every replica, up to `cfg.workers` at a time, and writes into
/// `out_dir`: replica_<i>.csv, replica_<i>.rm (final machine), aggregate.csv,
/// timing.csv, and replica_<i>.ckpt when checkpointing.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 const ExperimentOptions& options = {});

/// Re-aggregates raw CSVs.
std::vector<CurveRow> curves_from_files(const std::vector<std::filesystem::path>& raw_files);

/// Raw CSV files of an output directory, in replica order.
std::vector<std::filesystem::path> raw_files_in(const std::filesystem::path& dir);

/// Outcome class a machine assigns to a complete trace: Goal at the accepting
/// state, DeadEnd at the rejecting one, Incomplete otherwise.
TraceOutcome classify(const RewardMachine& rm, const SymbolicTrace& trace);

/// Fraction of traces on which both machines assign the same class.
double outcome_agreement(const RewardMachine& a, const RewardMachine& b, const std::vector<SymbolicTrace>& traces);

/// Labels of a uniformly random walk of `length` moves from the start cell.
SymbolicTrace random_walk(const GridMap& map, std::size_t length, Rng& rng);

/// Noise-free random-walk trace cut at the task's terminal event, with the
/// outcome assigned by the ground-truth machine.
struct LabelledTrace {
  SymbolicTrace trace;
  TraceOutcome outcome = TraceOutcome::Incomplete;
};
LabelledTrace labelled_walk(const GridMap& map, const RewardMachine& task, std::size_t max_length, Rng& rng);

}  // namespace probirm
