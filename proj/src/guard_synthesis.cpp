#include "probirm/guard_synthesis.hpp"

#include "probirm/error.hpp"

#include <boost/functional/hash.hpp>

#include <algorithm>
#include <bit>

namespace probirm {

int guard_cost(const Guard& guard, LengthCost cost) {
  return (cost == LengthCost::EdgePlusLiterals ? 1 : 0) + guard.literal_count();
}

int machine_length(const RewardMachine& rm, LengthCost cost) {
  int total = 0;
  for (StateId u = 0; u < rm.num_states(); ++u) {
    for (const auto& e : rm.edges(u)) total += guard_cost(e.guard, cost);
  }
  return total;
}

std::size_t GuardSynthesizer::KeyHash::operator()(const std::vector<std::uint32_t>& key) const {
  return boost::hash_range(key.begin(), key.end());
}

namespace {

struct Canonical {
  std::vector<Label> labels;
  std::vector<int> cls;
  std::vector<int> original_cls;  // canonical class -> input class
  std::vector<std::uint32_t> key;
};

Canonical canonicalize(const std::vector<LabelClass>& constraints) {
  std::vector<LabelClass> sorted = constraints;
  std::sort(sorted.begin(), sorted.end(), [](const LabelClass& a, const LabelClass& b) { return a.label < b.label; });
  Canonical c;
  c.original_cls.push_back(0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i].label == sorted[i - 1].label) {
      throw ContractViolation("guard synthesis needs distinct labels");
    }
    int k = 0;
    if (sorted[i].cls != 0) {
      auto it = std::find(c.original_cls.begin() + 1, c.original_cls.end(), sorted[i].cls);
      k = static_cast<int>(it - c.original_cls.begin());
      if (it == c.original_cls.end()) c.original_cls.push_back(sorted[i].cls);
    }
    c.labels.push_back(sorted[i].label);
    c.cls.push_back(k);
    c.key.push_back(static_cast<std::uint32_t>(sorted[i].label.bits()) << 8 | static_cast<std::uint32_t>(k));
  }
  return c;
}

class Search {
 public:
  Search(const Canonical& problem, LengthCost cost, GuardSpace space)
      : p_(problem), space_(space), edge_(cost == LengthCost::EdgePlusLiterals ? 1 : 0) {
    for (std::size_t i = 0; i < p_.labels.size(); ++i) {
      props_ = props_ | p_.labels[i];
      if (p_.cls[i] == 0) has_self_ = true;
    }
    props_.for_each([&](PropId q) { prop_list_.push_back(q); });
    masks_.resize(std::size_t{1} << prop_list_.size());
    for (std::size_t m = 0; m < masks_.size(); ++m) masks_[m] = static_cast<std::uint32_t>(m);
    std::stable_sort(masks_.begin(), masks_.end(),
                     [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
    cover_.assign(p_.labels.size(), -1);
  }

  /// Upper bound from one full minterm per non-self label.
  int minterm_bound() const {
    int ub = 0;
    for (int c : p_.cls) {
      if (c != 0) ub += edge_ + static_cast<int>(prop_list_.size());
    }
    return ub;
  }

  /// Runs branch and bound; returns the best cost found below `cutoff`, or
  /// `cutoff` if none.
  int run(int cutoff) {
    best_ = cutoff;
    recurse(0);
    return best_;
  }

  const std::vector<GuardChoice>& best_guards() const { return best_guards_; }

 private:
  int remaining_classes(std::size_t from) const {
    std::uint64_t seen = 0;
    int n = 0;
    for (std::size_t i = from; i < p_.labels.size(); ++i) {
      if (p_.cls[i] == 0 || cover_[i] >= 0) continue;
      const std::uint64_t bit = std::uint64_t{1} << (p_.cls[i] & 63);
      if (!(seen & bit)) {
        seen |= bit;
        ++n;
      }
    }
    return n;
  }

  void recurse(int cost) {
    std::size_t first = 0;
    while (first < p_.labels.size() && (p_.cls[first] == 0 || cover_[first] >= 0)) ++first;
    if (first == p_.labels.size()) {
      if (cost < best_) {
        best_ = cost;
        best_guards_ = chosen_;
      }
      return;
    }
    const int classes = remaining_classes(first);
    const int min_literals = (chosen_.empty() && classes == 1 && !has_self_) ? 0 : 1;
    if (cost + classes * (edge_ + min_literals) >= best_) return;

    const Label x = p_.labels[first];
    const int target = p_.cls[first];
    const int rest_bound = (classes - 1) * (edge_ + 1);
    for (std::uint32_t m : masks_) {
      Guard g;
      for (std::size_t j = 0; j < prop_list_.size(); ++j) {
        if (!((m >> j) & 1u)) continue;
        const PropId q = prop_list_[j];
        if (x.contains(q)) {
          g.positive.insert(q);
        } else {
          g.negative.insert(q);
        }
      }
      const int gc = edge_ + g.literal_count();
      if (cost + gc + rest_bound >= best_) break;  // masks are sorted by literal count
      if (space_ == GuardSpace::Observed && g.literal_count() > 1 && g.positive != x) continue;
      if (!admissible(g, target)) continue;

      const int idx = static_cast<int>(chosen_.size());
      chosen_.push_back(GuardChoice{g, target});
      for (std::size_t i = 0; i < p_.labels.size(); ++i) {
        if (satisfies(p_.labels[i], g)) cover_[i] = idx;
      }
      recurse(cost + gc);
      for (std::size_t i = 0; i < p_.labels.size(); ++i) {
        if (cover_[i] == idx) cover_[i] = -1;
      }
      chosen_.pop_back();
    }
  }

  bool admissible(const Guard& g, int target) const {
    for (const auto& other : chosen_) {
      if (!mutually_exclusive(g, other.guard)) return false;
    }
    for (std::size_t i = 0; i < p_.labels.size(); ++i) {
      if (p_.cls[i] != target && satisfies(p_.labels[i], g)) return false;
    }
    return true;
  }

  const Canonical& p_;
  GuardSpace space_;
  int edge_;
  Label props_;
  bool has_self_ = false;
  std::vector<PropId> prop_list_;
  std::vector<std::uint32_t> masks_;
  std::vector<int> cover_;
  std::vector<GuardChoice> chosen_;
  std::vector<GuardChoice> best_guards_;
  int best_ = 0;
};

}  // namespace

int GuardSynthesizer::cost(const std::vector<LabelClass>& constraints, int limit) {
  Canonical c = canonicalize(constraints);
  auto it = cache_.find(c.key);
  if (it != cache_.end() && (it->second.exact || it->second.value > limit)) return it->second.value;

  Search search(c, cost_, space_);
  // Minterms are admissible in every guard space, so the search is exact
  // whenever the cutoff lies above the minterm bound.
  const int cutoff = std::min(limit, search.minterm_bound()) + 1;
  const int found = search.run(cutoff);
  const Entry entry{found, found < cutoff};
  cache_[std::move(c.key)] = entry;
  return entry.value;
}

std::vector<GuardChoice> GuardSynthesizer::solve(const std::vector<LabelClass>& constraints) {
  Canonical c = canonicalize(constraints);
  Search search(c, cost_, space_);
  const int ub = search.minterm_bound();
  search.run(ub + 1);
  std::vector<GuardChoice> out = search.best_guards();
  for (auto& g : out) g.cls = c.original_cls[static_cast<std::size_t>(g.cls)];
  return out;
}

}  // namespace probirm
