#include "probirm/example_pool.hpp"

#include "probirm/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

namespace probirm {

namespace {

bool body_less(const SymbolicTrace& a, const SymbolicTrace& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

SymbolicTrace sample_trace(const NoisyTrace& trace, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SymbolicTrace out;
  out.reserve(trace.size());
  for (const auto& pl : trace) {
    Label l;
    for (std::size_t i = 0; i < pl.size(); ++i) {
      if (unit(rng) < pl.probs[static_cast<Eigen::Index>(i)]) l.insert(static_cast<PropId>(i));
    }
    out.push_back(l);
  }
  return out;
}

WeightedExample sample_example(const NoisyTrace& trace, TraceOutcome outcome, Rng& rng, std::size_t id) {
  return WeightedExample{id, 1.0, outcome, compress(sample_trace(trace, rng))};
}

std::vector<WeightedExample> incomplete_prefixes(const NoisyTrace& trace, Rng& rng, PrefixPolicy policy,
                                                 std::size_t first_id) {
  if (trace.size() < 2) return {};
  std::vector<std::size_t> lengths(trace.size() - 1);
  std::iota(lengths.begin(), lengths.end(), std::size_t{1});
  if (policy.kind == PrefixPolicy::Kind::Uniform && policy.count < lengths.size()) {
    // Partial Fisher-Yates: the first `count` slots hold a uniform sample.
    for (std::size_t i = 0; i < policy.count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, lengths.size() - 1);
      std::swap(lengths[i], lengths[pick(rng)]);
    }
    lengths.resize(policy.count);
    std::sort(lengths.begin(), lengths.end());
  }
  std::vector<WeightedExample> out;
  out.reserve(lengths.size());
  for (std::size_t k : lengths) {
    NoisyTrace prefix(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(k));
    out.push_back(sample_example(prefix, TraceOutcome::Incomplete, rng, first_id + out.size()));
  }
  return out;
}

std::array<double, kOutcomeCount> class_mass(const std::vector<WeightedExample>& pool) {
  std::array<double, kOutcomeCount> mass{};
  for (const auto& ex : pool) {
    if (std::isfinite(ex.penalty)) mass[static_cast<std::size_t>(ex.outcome)] += ex.penalty;
  }
  return mass;
}

std::vector<WeightedExample> consolidate(std::vector<WeightedExample> pool) {
  auto less = [](const WeightedExample& a, const WeightedExample& b) {
    if (a.body != b.body) return body_less(a.body, b.body);
    if (a.outcome != b.outcome) return a.outcome < b.outcome;
    return a.id < b.id;
  };
  std::sort(pool.begin(), pool.end(), less);

  std::vector<WeightedExample> merged;
  for (auto& ex : pool) {
    if (!merged.empty() && merged.back().body == ex.body && merged.back().outcome == ex.outcome) {
      merged.back().penalty += ex.penalty;
    } else {
      merged.push_back(std::move(ex));
    }
  }

  const auto mass = class_mass(merged);
  double total = 0.0;
  int classes = 0;
  for (double m : mass) {
    if (m > 0.0) {
      total += m;
      ++classes;
    }
  }
  if (classes == 0) return merged;
  const double target = total / classes;
  std::array<double, kOutcomeCount> scale{};
  for (std::size_t c = 0; c < kOutcomeCount; ++c) {
    // Classes already at the target are left untouched so that a second pass
    // is the identity.
    scale[c] = (mass[c] > 0.0 && std::abs(mass[c] - target) > 1e-12 * target) ? target / mass[c] : 1.0;
  }
  for (auto& ex : merged) {
    if (std::isfinite(ex.penalty)) ex.penalty *= scale[static_cast<std::size_t>(ex.outcome)];
  }
  return merged;
}

std::string format_example(const WeightedExample& ex, const Alphabet& alphabet) {
  return std::string(1, outcome_code(ex.outcome)) + ';' + format_double(ex.penalty) + ';' +
         format_symbolic_steps(ex.body, alphabet);
}

WeightedExample parse_example(std::string_view line, Alphabet& alphabet) {
  if (line.size() < 2 || line[1] != ';') throw ParseError("example line must start with 'G;', 'D;' or 'I;'");
  auto second = line.find(';', 2);
  if (second == std::string_view::npos) throw ParseError("example line lacks a penalty column");
  WeightedExample ex;
  ex.outcome = parse_outcome(line[0]);
  ex.penalty = parse_double(line.substr(2, second - 2));
  if (!(ex.penalty > 0.0)) throw ParseError("example penalty must be positive");
  TraceRecord rec{ex.outcome, parse_steps(line.substr(second + 1), alphabet)};
  ex.body = rec.symbolic();
  return ex;
}

void write_pool(std::ostream& out, const std::vector<WeightedExample>& pool, const Alphabet& alphabet) {
  for (const auto& ex : pool) out << format_example(ex, alphabet) << '\n';
}

std::vector<WeightedExample> read_pool(std::istream& in, Alphabet& alphabet) {
  std::vector<WeightedExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(parse_example(line, alphabet));
    out.back().id = out.size() - 1;
  }
  return out;
}

}  // namespace probirm
