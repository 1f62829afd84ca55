#include "probirm/agent.hpp"
#include "probirm/error.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace probirm;

TEST_CASE("linear exploration schedule") {
  const ExplorationSchedule s{1.0, 0.1, 100};
  CHECK(s.epsilon(0) == 1.0);
  CHECK(s.epsilon(50) == doctest::Approx(0.55));
  CHECK(s.epsilon(100) == 0.1);
  CHECK(s.epsilon(10'000) == 0.1);
  CHECK(ExplorationSchedule{0.5, 0.2, 0}.epsilon(0) == 0.2);
  for (std::size_t t = 1; t < 120; ++t) CHECK(s.epsilon(t) <= s.epsilon(t - 1));
}

TEST_CASE("belief binning truncates") {
  Eigen::VectorXd b(4);
  b << 0.3, 0.299, 0.401, 0.0;
  CHECK(bin_belief(b, 2) == BinnedBelief{30, 29, 40, 0});
  CHECK(bin_belief(b, 1) == BinnedBelief{3, 2, 4, 0});
  CHECK(bin_belief(b, 0) == BinnedBelief{0, 0, 0, 0});
  Eigen::VectorXd one(2);
  one << 1.0, 0.0;
  CHECK(bin_belief(one, 2) == BinnedBelief{100, 0});
  CHECK(bin_belief(one, 4) == BinnedBelief{10000, 0});
  Eigen::VectorXf single(2);
  single << 0.7f, 0.3f;
  CHECK(bin_belief(single, 2) == BinnedBelief{70, 30});
}

TEST_CASE("q update") {
  QTable q;
  const QKey a{0, {100, 0}};
  const QKey b{1, {100, 0}};
  q.at(b) = {0.0, 2.0, 1.0, -1.0};
  q_update(q, a, Action::Left, 1.0, b, false, 0.5, 0.9);
  CHECK(q.get(a)[2] == doctest::Approx(0.5 * (1.0 + 0.9 * 2.0)));
  q_update(q, a, Action::Left, 1.0, b, true, 0.5, 0.9);
  CHECK(q.get(a)[2] == doctest::Approx(0.5 * 1.4 + 0.5 * 1.0));
  const std::size_t before = q.size();
  q_update(q, QKey{7, {}}, Action::Up, 1.0, b, false, 0.0, 0.9);
  CHECK(q.size() == before);
  CHECK(q.get(QKey{9, {1}})[0] == 0.0);
  CHECK(q.max_value(QKey{9, {1}}) == 0.0);
}

TEST_CASE("greedy selection breaks ties uniformly") {
  QTable q;
  const QKey key{3, {50, 50}};
  Rng rng(12);
  std::map<Action, int> counts;
  for (int i = 0; i < 8000; ++i) ++counts[select_action(q, key, 0.0, rng)];
  for (Action a : kActions) CHECK(counts[a] / 8000.0 == doctest::Approx(0.25).epsilon(0.1));

  q.at(key) = {1.0, 3.0, 3.0, 2.0};
  counts.clear();
  for (int i = 0; i < 4000; ++i) ++counts[select_action(q, key, 0.0, rng)];
  CHECK(counts[Action::Up] == 0);
  CHECK(counts[Action::Right] == 0);
  CHECK(counts[Action::Down] / 4000.0 == doctest::Approx(0.5).epsilon(0.1));

  // With epsilon 1 every action appears.
  counts.clear();
  for (int i = 0; i < 4000; ++i) ++counts[select_action(q, key, 1.0, rng)];
  for (Action a : kActions) CHECK(counts[a] > 800);
}

TEST_CASE("Q-table text round-trips") {
  QTable q;
  Rng rng(2);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  for (int s = 0; s < 40; ++s) {
    q.at(QKey{s, {static_cast<std::uint16_t>(s % 3), 100}}) = {value(rng), value(rng), value(rng), 1.0 / 3.0};
  }
  std::stringstream text;
  q.dump(text);
  const std::string first = text.str();
  const QTable back = QTable::load(text);
  CHECK(back == q);
  std::ostringstream again;
  back.dump(again);
  CHECK(again.str() == first);
  std::istringstream bad("1 0,100 0.5 0.5\n");
  CHECK_THROWS_AS(QTable::load(bad), ParseError);
}
