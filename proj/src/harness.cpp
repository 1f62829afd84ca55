#include "probirm/harness.hpp"

#include "probirm/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace probirm {

namespace fs = std::filesystem;

std::vector<Replica> replicas(const ExperimentConfig& cfg) {
  std::vector<Replica> out;
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t m = 0; m < cfg.maps; ++m) out.push_back({out.size(), seed, m});
  }
  return out;
}

namespace {

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (std::uint64_t p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

constexpr std::uint64_t kMapStream = 0x6d6170;  // keeps map draws apart from agent draws

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open map file");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

template <typename Write>
void write_atomically(const fs::path& path, Write&& write) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    write(out);
  }
  fs::rename(tmp, path);
}

std::string records_path(const std::string& checkpoint_path) { return checkpoint_path + ".records"; }

}  // namespace

GridMap replica_map(const ExperimentConfig& cfg, std::size_t map_index) {
  switch (cfg.map) {
    case MapKind::Canonical:
      return GridMap::canonical();
    case MapKind::File:
      return parse_map(read_file(cfg.map_path));
    case MapKind::Random: {
      Rng rng(mix({cfg.master_seed, kMapStream, map_index}));
      return random_map(cfg.task, rng);
    }
  }
  return GridMap::canonical();
}

std::uint64_t replica_seed(const ExperimentConfig& cfg, const Replica& replica) {
  return mix({cfg.master_seed, replica.seed, replica.map_index});
}

Environment make_environment(const ExperimentConfig& cfg, std::size_t map_index) {
  Environment env;
  env.map = replica_map(cfg, map_index);
  env.task = make_task(cfg.task);
  env.sensors = make_sensor_bank(cfg, env.map);
  return env;
}

ReplicaResult run_replica(const ExperimentConfig& cfg, const Replica& replica, Mode mode,
                          const std::string& checkpoint_path, std::vector<EpisodeRecord> resume_records) {
  const auto t0 = std::chrono::steady_clock::now();
  const Environment env = make_environment(cfg, replica.map_index);
  const Alphabet& alphabet = office::alphabet();
  const std::uint64_t seed = replica_seed(cfg, replica);

  RunState run = mode == Mode::Baseline ? make_baseline_state(env.task, seed) : make_run_state(cfg.loop, seed);
  ReplicaResult result;
  result.replica = replica;
  if (!checkpoint_path.empty() && fs::exists(checkpoint_path)) {
    std::ifstream in(checkpoint_path);
    run = read_checkpoint(in, alphabet);
    if (resume_records.size() < run.episode) {
      throw Error(checkpoint_path + ": raw CSV holds fewer episodes than the checkpoint");
    }
    resume_records.resize(run.episode);
    result.records = std::move(resume_records);
  }

  const std::size_t every = checkpoint_path.empty() ? 0 : cfg.checkpoint_every;
  run_interleaved(
      run, env, cfg.loop, alphabet,
      [&](const EpisodeRecord& r) {
        result.records.push_back(r);
        // Saved just before the checkpoint itself; a resumed run trims any
        // records past the checkpoint.
        if (every > 0 && run.episode % every == 0) {
          write_atomically(records_path(checkpoint_path),
                           [&](std::ostream& out) { write_raw_csv(out, result.records); });
        }
      },
      every, checkpoint_path);
  result.final_machine = run.rm;
  result.relearns = run.relearns;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<double> smooth(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw ContractViolation("smoothing window must be positive");
  std::vector<double> out(values.size());
  for (std::size_t e = 0; e < values.size(); ++e) {
    const std::size_t from = e + 1 >= window ? e + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t i = from; i <= e; ++i) sum += values[i];
    out[e] = sum / static_cast<double>(e + 1 - from);
  }
  return out;
}

std::vector<CurveRow> aggregate(const std::vector<std::vector<double>>& returns, std::size_t window) {
  if (returns.empty()) throw ContractViolation("aggregate needs at least one replica");
  const std::size_t n = returns.front().size();
  for (const auto& r : returns) {
    if (r.size() != n) throw ContractViolation("replicas have different episode counts");
  }
  std::vector<double> mean(n);
  std::vector<double> sd(n);
  const double k = static_cast<double>(returns.size());
  for (std::size_t e = 0; e < n; ++e) {
    double sum = 0.0;
    for (const auto& r : returns) sum += r[e];
    mean[e] = sum / k;
    double sq = 0.0;
    for (const auto& r : returns) sq += (r[e] - mean[e]) * (r[e] - mean[e]);
    sd[e] = std::sqrt(sq / k);
  }
  const std::vector<double> smooth_mean = smooth(mean, window);
  const std::vector<double> smooth_sd = smooth(sd, window);
  std::vector<CurveRow> rows(n);
  for (std::size_t e = 0; e < n; ++e) rows[e] = {e, mean[e], sd[e], smooth_mean[e], smooth_sd[e]};
  return rows;
}

long first_episode_reaching(const std::vector<double>& returns, double level, std::size_t window) {
  const std::vector<double> s = smooth(returns, window);
  for (std::size_t e = window - 1; e < s.size(); ++e) {
    if (s[e] >= level) return static_cast<long>(e);
  }
  return -1;
}

void write_raw_csv(std::ostream& out, const std::vector<EpisodeRecord>& records) {
  out << "episode,return,outcome,relearn,rm_states,steps\n";
  for (const auto& r : records) {
    out << r.episode << ',' << format_double(r.ret) << ',' << outcome_code(r.outcome) << ',' << (r.relearn ? 1 : 0)
        << ',' << r.rm_states << ',' << r.steps << '\n';
  }
}

std::vector<EpisodeRecord> read_raw_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "episode,return,outcome,relearn,rm_states,steps") {
    throw ParseError("raw CSV: unexpected header");
  }
  std::vector<EpisodeRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string part; std::getline(fields, part, ',');) f.push_back(part);
    if (f.size() != 6 || f[2].size() != 1) throw ParseError("raw CSV: malformed row '" + line + "'");
    EpisodeRecord r;
    try {
      r.episode = std::stoul(f[0]);
      r.ret = parse_double(f[1]);
      r.outcome = parse_outcome(f[2][0]);
      r.relearn = f[3] == "1";
      r.rm_states = std::stoi(f[4]);
      r.steps = std::stoul(f[5]);
    } catch (const std::logic_error&) {
      throw ParseError("raw CSV: malformed row '" + line + "'");
    }
    out.push_back(r);
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "episode,mean_return,std_return,smoothed_mean,smoothed_std\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << format_double(r.mean_return) << ',' << format_double(r.std_return) << ','
        << format_double(r.smoothed_mean) << ',' << format_double(r.smoothed_std) << '\n';
  }
}

namespace {

std::string replica_name(std::size_t index) { return "replica_" + std::to_string(index); }

std::vector<double> returns_of(const std::vector<EpisodeRecord>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.ret);
  return out;
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir,
                                 const ExperimentOptions& options) {
  fs::create_directories(out_dir);
  const std::vector<Replica> reps = replicas(cfg);
  ExperimentSummary summary;
  summary.results.resize(reps.size());

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::mutex log_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < reps.size(); i = next++) {
      try {
        const Replica& rep = reps[i];
        const fs::path raw = out_dir / (replica_name(i) + ".csv");
        std::string ckpt;
        std::vector<EpisodeRecord> previous;
        if (cfg.checkpoint_every > 0) {
          ckpt = (out_dir / (replica_name(i) + ".ckpt")).string();
          if (!options.resume) {
            fs::remove(ckpt);
          } else if (fs::exists(ckpt)) {
            std::ifstream in(records_path(ckpt));
            if (in) previous = read_raw_csv(in);
          }
        }
        ReplicaResult res = run_replica(cfg, rep, options.mode, ckpt, std::move(previous));
        write_atomically(raw, [&](std::ostream& out) { write_raw_csv(out, res.records); });
        write_atomically(out_dir / (replica_name(i) + ".rm"),
                         [&](std::ostream& out) { out << format_machine(res.final_machine, office::alphabet()); });
        summary.results[i] = std::move(res);
        const std::size_t done = ++finished;
        if (options.log) {
          std::lock_guard lock(log_mutex);
          std::ostringstream msg;
          msg << "replica " << i << " (seed " << rep.seed << ", map " << rep.map_index << ") done in "
              << summary.results[i].seconds << " s, " << done << "/" << reps.size();
          options.log(msg.str());
        }
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) failure = std::current_exception();
        next = reps.size();
      }
    }
  };

  const std::size_t n_workers = std::clamp<std::size_t>(cfg.workers, 1, std::max<std::size_t>(reps.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::vector<double>> returns;
  for (const auto& r : summary.results) returns.push_back(returns_of(r.records));
  summary.curve = aggregate(returns);
  write_atomically(out_dir / "aggregate.csv", [&](std::ostream& out) { write_aggregate_csv(out, summary.curve); });
  write_atomically(out_dir / "timing.csv", [&](std::ostream& out) {
    out << "replica,seed,map,seconds,relearns,final_rm_states\n";
    for (const auto& r : summary.results) {
      out << r.replica.index << ',' << r.replica.seed << ',' << r.replica.map_index << ',' << r.seconds << ','
          << r.relearns << ',' << r.final_machine.num_states() << '\n';
    }
  });
  return summary;
}

std::vector<fs::path> raw_files_in(const fs::path& dir) {
  std::vector<std::pair<std::size_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("replica_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const std::string digits = entry.path().stem().string().substr(8);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
    found.emplace_back(std::stoul(digits), entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [i, p] : found) out.push_back(std::move(p));
  return out;
}

std::vector<CurveRow> curves_from_files(const std::vector<fs::path>& raw_files) {
  if (raw_files.empty()) throw Error("no raw CSV files to aggregate");
  std::vector<std::vector<double>> returns;
  for (const auto& path : raw_files) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    returns.push_back(returns_of(read_raw_csv(in)));
  }
  return aggregate(returns);
}

TraceOutcome classify(const RewardMachine& rm, const SymbolicTrace& trace) {
  const StateId u = final_state(rm, trace);
  if (u == rm.accepting()) return TraceOutcome::Goal;
  if (u == rm.rejecting()) return TraceOutcome::DeadEnd;
  return TraceOutcome::Incomplete;
}

double outcome_agreement(const RewardMachine& a, const RewardMachine& b, const std::vector<SymbolicTrace>& traces) {
  if (traces.empty()) throw ContractViolation("agreement needs at least one trace");
  std::size_t same = 0;
  for (const auto& t : traces) same += classify(a, t) == classify(b, t);
  return static_cast<double>(same) / static_cast<double>(traces.size());
}

SymbolicTrace random_walk(const GridMap& map, std::size_t length, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
  SymbolicTrace out;
  Cell c = map.start();
  for (std::size_t t = 0; t < length; ++t) {
    c = map.move(c, kActions[pick(rng)]);
    out.push_back(map.label_at(c));
  }
  return out;
}

LabelledTrace labelled_walk(const GridMap& map, const RewardMachine& task, std::size_t max_length, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
  TaskMonitor monitor(task);
  LabelledTrace out;
  Cell c = map.start();
  for (std::size_t t = 0; t < max_length && !monitor.terminal(); ++t) {
    c = map.move(c, kActions[pick(rng)]);
    out.trace.push_back(map.label_at(c));
    monitor.advance(out.trace.back());
  }
  out.outcome = monitor.goal() ? TraceOutcome::Goal : monitor.terminal() ? TraceOutcome::DeadEnd
                                                                         : TraceOutcome::Incomplete;
  return out;
}

}  // namespace probirm
