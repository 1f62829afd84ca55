#pragma once

// Experiment configuration: an INI-style `key = value` file with sections.
// See docs/example.ini for every key.

#include "probirm/interleave.hpp"
#include "probirm/sensors.hpp"
#include "probirm/worlds.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace probirm {

enum class MapKind { Canonical, Random, File };
enum class NoiseTargets { None, First, All, List };

struct NoiseConfig {
  NoiseTargets targets = NoiseTargets::First;
  std::vector<std::string> names;  // for NoiseTargets::List
  // Exactly one way of specifying the noisy sensors: a target posterior, a
  // symmetric confidence, or sensitivity and specificity.
  std::optional<double> posterior = 0.9;
  std::optional<double> confidence;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::map<std::string, double> priors;  // per-proposition overrides
};

struct ExperimentConfig {
  std::string task = "coffee";
  MapKind map = MapKind::Canonical;
  std::string map_path;  // for MapKind::File
  std::size_t maps = 1;  // number of random maps
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::size_t checkpoint_every = 0;
  NoiseConfig noise;
  InterleaveConfig loop;
};

/// Parses and validates. Errors are ConfigError naming the offending
/// `section.key`.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Propositions whose sensors are noisy.
Label noisy_propositions(const ExperimentConfig& cfg);

/// Sensors for `map`: noise-free for quiet propositions; noisy ones use the
/// configured specification with the map's occupancy prior unless overridden.
SensorBank make_sensor_bank(const ExperimentConfig& cfg, const GridMap& map);

}  // namespace probirm
