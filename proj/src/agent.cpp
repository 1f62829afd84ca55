#include "probirm/agent.hpp"

#include "probirm/error.hpp"

#include <boost/functional/hash.hpp>

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace probirm {

std::size_t QKeyHash::operator()(const QKey& key) const {
  std::size_t seed = static_cast<std::size_t>(key.state);
  boost::hash_range(seed, key.belief.begin(), key.belief.end());
  return seed;
}

const QTable::Values& QTable::get(const QKey& key) const {
  static const Values zeros{};
  auto it = table_.find(key);
  return it == table_.end() ? zeros : it->second;
}

double QTable::max_value(const QKey& key) const {
  const auto& v = get(key);
  return *std::max_element(v.begin(), v.end());
}

void QTable::dump(std::ostream& out) const {
  std::vector<const std::pair<const QKey, Values>*> entries;
  entries.reserve(table_.size());
  for (const auto& e : table_) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](auto* a, auto* b) { return a->first < b->first; });
  for (const auto* e : entries) {
    out << e->first.state << ' ';
    for (std::size_t i = 0; i < e->first.belief.size(); ++i) out << (i ? "," : "") << e->first.belief[i];
    for (double v : e->second) out << ' ' << format_double(v);
    out << '\n';
  }
}

QTable QTable::load(std::istream& in) {
  QTable q;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    QKey key;
    std::string belief;
    if (!(fields >> key.state >> belief)) throw ParseError("malformed Q-table line: " + line);
    std::istringstream parts(belief);
    for (std::string part; std::getline(parts, part, ',');) {
      key.belief.push_back(static_cast<std::uint16_t>(std::stoul(part)));
    }
    Values v{};
    for (auto& x : v) {
      std::string text;
      if (!(fields >> text)) throw ParseError("malformed Q-table line: " + line);
      x = parse_double(text);
    }
    q.table_[std::move(key)] = v;
  }
  return q;
}

Action select_action(const QTable& q, const QKey& key, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
    return kActions[pick(rng)];
  }
  const auto& v = q.get(key);
  const double best = *std::max_element(v.begin(), v.end());
  std::array<std::size_t, kNumActions> ties{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (v[i] == best) ties[n++] = i;
  }
  if (n == 1) return kActions[ties[0]];
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  return kActions[ties[pick(rng)]];
}

void q_update(QTable& q, const QKey& key, Action a, double reward, const QKey& next, bool terminal, double alpha,
              double gamma) {
  if (alpha == 0.0) return;
  const double target = reward + (terminal ? 0.0 : gamma * q.max_value(next));
  double& entry = q.at(key)[static_cast<std::size_t>(a)];
  entry = (1.0 - alpha) * entry + alpha * target;
}

}  // namespace probirm
