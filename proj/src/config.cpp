#include "probirm/config.hpp"

#include "probirm/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace probirm {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, sep);) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

/// Reads one section and rejects keys it does not know about.
class Section {
 public:
  Section(const pt::ptree& root, std::string name, std::set<std::string> keys) : name_(std::move(name)) {
    const auto node = root.get_child_optional(pt::ptree::path_type(name_, '\0'));
    if (!node) return;
    for (const auto& [key, child] : *node) {
      if (!keys.contains(key)) bad(name_ + "." + key, "unknown key");
      if (!child.empty()) bad(name_ + "." + key, "nested values are not supported");
      values_[key] = trim(child.data());
    }
  }

  std::optional<std::string> text(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string field(const std::string& key) const { return name_ + "." + key; }

  void read(const std::string& key, double& out, double lo, double hi) const {
    if (auto v = text(key)) out = number(key, *v, lo, hi);
  }

  void read(const std::string& key, std::optional<double>& out, double lo, double hi) const {
    if (auto v = text(key)) out = number(key, *v, lo, hi);
  }

  template <typename Int>
  void read_int(const std::string& key, Int& out, long long lo, long long hi) const {
    if (auto v = text(key)) out = static_cast<Int>(integer(key, *v, lo, hi));
  }

  void read(const std::string& key, bool& out) const {
    auto v = text(key);
    if (!v) return;
    if (*v == "true" || *v == "on" || *v == "yes" || *v == "1") {
      out = true;
    } else if (*v == "false" || *v == "off" || *v == "no" || *v == "0") {
      out = false;
    } else {
      bad(field(key), "expected true or false, got '" + *v + "'");
    }
  }

  double number(const std::string& key, const std::string& v, double lo, double hi) const {
    double x = 0.0;
    try {
      x = parse_double(v);
    } catch (const Error&) {
      bad(field(key), "expected a number, got '" + v + "'");
    }
    if (!std::isfinite(x) || x < lo || x > hi) {
      bad(field(key), "must lie in [" + format_double(lo) + ", " + format_double(hi) + "], got " + v);
    }
    return x;
  }

  long long integer(const std::string& key, const std::string& v, long long lo, long long hi) const {
    std::size_t used = 0;
    long long x = 0;
    try {
      x = std::stoll(v, &used);
    } catch (const std::exception&) {
      bad(field(key), "expected an integer, got '" + v + "'");
    }
    if (used != v.size()) bad(field(key), "expected an integer, got '" + v + "'");
    if (x < lo || x > hi) {
      bad(field(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
    }
    return x;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

constexpr long long kMaxCount = 1'000'000'000LL;

std::vector<std::uint64_t> parse_seeds(const Section& s, const std::string& text) {
  // Comma-separated values; `a-b` expands to the inclusive range.
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(text, ',')) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      seeds.push_back(static_cast<std::uint64_t>(s.integer("seeds", part, 0, kMaxCount)));
      continue;
    }
    const auto lo = s.integer("seeds", trim(part.substr(0, dash)), 0, kMaxCount);
    const auto hi = s.integer("seeds", trim(part.substr(dash + 1)), 0, kMaxCount);
    if (hi < lo || hi - lo > 100000) bad(s.field("seeds"), "bad range '" + part + "'");
    for (auto v = lo; v <= hi; ++v) seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) bad(s.field("seeds"), "seed list must not be empty");
  return seeds;
}

void read_experiment(const pt::ptree& root, ExperimentConfig& cfg) {
  const Section s(root, "experiment",
                  {"task", "map", "map_file", "maps", "seeds", "master_seed", "episodes", "max_episode_length",
                   "workers", "checkpoint_every"});
  if (auto v = s.text("task")) {
    if (*v != "coffee" && *v != "coffeemail" && *v != "visitabcd") {
      bad(s.field("task"), "expected coffee, coffeemail or visitabcd, got '" + *v + "'");
    }
    cfg.task = *v;
  }
  if (auto v = s.text("map")) {
    if (*v == "canonical") {
      cfg.map = MapKind::Canonical;
    } else if (*v == "random") {
      cfg.map = MapKind::Random;
    } else if (*v == "file") {
      cfg.map = MapKind::File;
    } else {
      bad(s.field("map"), "expected canonical, random or file, got '" + *v + "'");
    }
  }
  if (auto v = s.text("map_file")) cfg.map_path = *v;
  if (cfg.map == MapKind::File && cfg.map_path.empty()) bad(s.field("map_file"), "required when map = file");
  s.read_int("maps", cfg.maps, 1, 10000);
  if (cfg.map != MapKind::Random && cfg.maps != 1) bad(s.field("maps"), "only random maps can be repeated");
  if (auto v = s.text("seeds")) cfg.seeds = parse_seeds(s, *v);
  s.read_int("master_seed", cfg.master_seed, 0, std::numeric_limits<long long>::max());
  s.read_int("episodes", cfg.loop.num_episodes, 1, kMaxCount);
  s.read_int("max_episode_length", cfg.loop.max_ep_len, 1, kMaxCount);
  s.read_int("workers", cfg.workers, 1, 1024);
  s.read_int("checkpoint_every", cfg.checkpoint_every, 0, kMaxCount);
}

void read_noise(const pt::ptree& root, ExperimentConfig& cfg) {
  const Section s(root, "noise", {"targets", "posterior", "confidence", "sensitivity", "specificity"});
  NoiseConfig& n = cfg.noise;
  if (auto v = s.text("targets")) {
    if (*v == "none") {
      n.targets = NoiseTargets::None;
    } else if (*v == "first") {
      n.targets = NoiseTargets::First;
    } else if (*v == "all") {
      n.targets = NoiseTargets::All;
    } else {
      n.targets = NoiseTargets::List;
      n.names = split(*v, ',');
      for (const auto& name : n.names) {
        if (!office::alphabet().find(name)) bad(s.field("targets"), "unknown proposition '" + name + "'");
      }
    }
  }
  const bool has_posterior = s.text("posterior").has_value();
  const bool has_confidence = s.text("confidence").has_value();
  const bool has_rates = s.text("sensitivity") || s.text("specificity");
  if (has_posterior + has_confidence + has_rates > 1) {
    bad("noise", "give only one of posterior, confidence, or sensitivity and specificity");
  }
  if (has_confidence || has_rates) n.posterior.reset();
  s.read("posterior", n.posterior, 0.0, 1.0);
  if (n.posterior && *n.posterior == 0.0) bad(s.field("posterior"), "must be positive");
  s.read("confidence", n.confidence, 0.0, 1.0);
  s.read("sensitivity", n.sensitivity, 0.0, 1.0);
  s.read("specificity", n.specificity, 0.0, 1.0);
  if (has_rates && (!n.sensitivity || !n.specificity)) {
    bad("noise", "sensitivity and specificity must be given together");
  }

  const Section priors(root, "priors", [] {
    std::set<std::string> names;
    for (PropId p = 0; p < office::alphabet().size(); ++p) names.insert(office::alphabet().name(p));
    return names;
  }());
  for (const auto& [name, text] : priors.values()) n.priors[name] = priors.number(name, text, 0.0, 1.0);
}

void read_agent(const pt::ptree& root, ExperimentConfig& cfg) {
  const Section s(root, "agent",
                  {"gamma", "alpha", "epsilon_start", "epsilon_end", "epsilon_decay_steps", "bin_decimals", "shaping",
                   "shaping_floor_scale", "threshold"});
  InterleaveConfig& c = cfg.loop;
  s.read("gamma", c.gamma, 0.0, 1.0);
  s.read("alpha", c.alpha, 0.0, 1.0);
  s.read("epsilon_start", c.exploration.start, 0.0, 1.0);
  s.read("epsilon_end", c.exploration.end, 0.0, 1.0);
  s.read_int("epsilon_decay_steps", c.exploration.decay_steps, 0, kMaxCount);
  s.read_int("bin_decimals", c.bin_decimals, 0, 4);
  s.read("shaping", c.shaping);
  s.read("shaping_floor_scale", c.shaping_floor_scale, 0.0, 1e6);
  if (auto v = s.text("threshold"); v && *v != "none") c.threshold = s.number("threshold", *v, 0.0, 1.0);
}

void read_interleave(const pt::ptree& root, ExperimentConfig& cfg) {
  const Section s(root, "interleave", {"beta", "warmup", "relearn_when", "samples_per_trace", "prefixes"});
  InterleaveConfig& c = cfg.loop;
  s.read("beta", c.beta, 0.0, 1e9);
  s.read_int("warmup", c.warmup, 0, kMaxCount);
  if (auto v = s.text("relearn_when")) {
    if (*v == "above") {
      c.relearn_when = RelearnWhen::Above;
    } else if (*v == "below") {
      c.relearn_when = RelearnWhen::Below;
    } else {
      bad(s.field("relearn_when"), "expected above or below, got '" + *v + "'");
    }
  }
  s.read_int("samples_per_trace", c.samples_per_trace, 1, 1000);
  if (auto v = s.text("prefixes")) {
    c.prefixes = *v == "all" ? PrefixPolicy::all()
                             : PrefixPolicy::uniform(static_cast<std::size_t>(s.integer("prefixes", *v, 0, 100000)));
  }
}

void read_induction(const pt::ptree& root, ExperimentConfig& cfg) {
  const Section s(root, "induction",
                  {"initial_max_states", "max_states_limit", "budget", "node_budget", "strict", "length_cost",
                   "guard_space"});
  InterleaveConfig& c = cfg.loop;
  s.read_int("initial_max_states", c.initial_max_states, 0, 8);
  s.read_int("max_states_limit", c.max_states_limit, 0, 8);
  if (c.max_states_limit < c.initial_max_states) {
    bad(s.field("max_states_limit"), "must not be below initial_max_states");
  }
  s.read("budget", c.induction_budget, 0.0, 1e9);
  s.read_int("node_budget", c.induction_node_budget, 0, std::numeric_limits<long long>::max());
  s.read("strict", c.strict_budget);
  if (auto v = s.text("length_cost")) {
    if (*v == "edges_and_literals") {
      c.length_cost = LengthCost::EdgePlusLiterals;
    } else if (*v == "literals") {
      c.length_cost = LengthCost::LiteralsOnly;
    } else {
      bad(s.field("length_cost"), "expected edges_and_literals or literals, got '" + *v + "'");
    }
  }
  if (auto v = s.text("guard_space")) {
    if (*v == "full") {
      c.guard_space = GuardSpace::Full;
    } else if (*v == "observed") {
      c.guard_space = GuardSpace::Observed;
    } else {
      bad(s.field("guard_space"), "expected full or observed, got '" + *v + "'");
    }
  }
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  static const std::set<std::string> sections{"experiment", "noise", "priors", "agent", "interleave", "induction"};
  for (const auto& [name, child] : root) {
    if (!sections.contains(name)) bad(name, child.empty() ? "keys must belong to a section" : "unknown section");
  }
  ExperimentConfig cfg;
  read_experiment(root, cfg);
  read_noise(root, cfg);
  read_agent(root, cfg);
  read_interleave(root, cfg);
  read_induction(root, cfg);
  cfg.loop.initial_max_states = std::min(cfg.loop.initial_max_states, cfg.loop.max_states_limit);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Label noisy_propositions(const ExperimentConfig& cfg) {
  switch (cfg.noise.targets) {
    case NoiseTargets::None:
      return {};
    case NoiseTargets::First:
      return first_event_propositions(cfg.task);
    case NoiseTargets::All:
      return task_propositions(cfg.task);
    case NoiseTargets::List: {
      Label out;
      for (const auto& name : cfg.noise.names) out.insert(*office::alphabet().find(name));
      return out;
    }
  }
  return {};
}

SensorBank make_sensor_bank(const ExperimentConfig& cfg, const GridMap& map) {
  const Alphabet& names = office::alphabet();
  const Label noisy = noisy_propositions(cfg);
  SensorBank bank(names.size());
  for (PropId p = 0; p < names.size(); ++p) {
    auto it = cfg.noise.priors.find(names.name(p));
    const double prior = it != cfg.noise.priors.end() ? it->second : map.occupancy_prior(p);
    SensorSpec spec{1.0, 1.0, prior};
    if (noisy.contains(p)) {
      const NoiseConfig& n = cfg.noise;
      if (n.posterior) {
        spec = SensorSpec::with_confidence(solve_confidence(prior, *n.posterior), prior);
      } else if (n.confidence) {
        spec = SensorSpec::with_confidence(*n.confidence, prior);
      } else {
        spec = SensorSpec{*n.sensitivity, *n.specificity, prior};
      }
    }
    bank[p] = spec;
  }
  return bank;
}

}  // namespace probirm
