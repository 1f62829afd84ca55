#include "probirm/error.hpp"
#include "probirm/sensors.hpp"

#include <doctest.h>

#include <cmath>

using namespace probirm;

namespace {

// Bayes' rule written out directly.
double bayes(double sens, double spec, double prior, bool detected) {
  const double hit = detected ? sens : 1.0 - sens;
  const double false_hit = detected ? 1.0 - spec : spec;
  return hit * prior / (hit * prior + false_hit * (1.0 - prior));
}

}  // namespace

TEST_CASE("posterior matches Bayes' rule") {
  for (double sens : {0.6, 0.8, 0.99}) {
    for (double spec : {0.7, 0.95}) {
      for (double prior : {0.02, 0.3, 0.5}) {
        const SensorSpec s{sens, spec, prior};
        CHECK(posterior(s, true) == doctest::Approx(bayes(sens, spec, prior, true)).epsilon(1e-12));
        CHECK(posterior(s, false) == doctest::Approx(bayes(sens, spec, prior, false)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("a perfect sensor reports certainty") {
  const SensorSpec s{1.0, 1.0, 0.1};
  CHECK(posterior(s, true) == 1.0);
  CHECK(posterior(s, false) == 0.0);
}

TEST_CASE("impossible readings are degenerate") {
  CHECK_THROWS_AS(posterior(SensorSpec{0.0, 1.0, 0.3}, true), DegenerateSensorError);
  CHECK_THROWS_AS(posterior(SensorSpec{1.0, 1.0, 0.0}, true), DegenerateSensorError);
}

TEST_CASE("solve_confidence inverts the posterior") {
  for (double prior : {0.01, 0.05, 0.1, 0.3, 0.49}) {
    for (double target : {0.5, 0.75, 0.8, 0.9, 0.99}) {
      if (target < prior) continue;
      const double c = solve_confidence(prior, target);
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
      CHECK(posterior(SensorSpec::with_confidence(c, prior), true) == doctest::Approx(target).epsilon(1e-12));
    }
  }
}

TEST_CASE("solve_confidence closed form") {
  // t(1-p) / (p + t - 2pt)
  CHECK(solve_confidence(0.1, 0.9) == doctest::Approx(0.9 * 0.9 / (0.1 + 0.9 - 2 * 0.1 * 0.9)));
  CHECK(solve_confidence(0.5, 0.8) == doctest::Approx(0.8));
}

TEST_CASE("unreachable targets are rejected") {
  CHECK_THROWS_AS(solve_confidence(0.3, 1.5), InfeasibleTargetError);
  CHECK_THROWS_AS(solve_confidence(0.0, 0.9), InfeasibleTargetError);
  CHECK_THROWS_AS(solve_confidence(1.0, 0.9), InfeasibleTargetError);
}

TEST_CASE("sense draws readings at the specified rates") {
  Rng rng(11);
  SensorBank bank{SensorSpec{0.8, 0.9, 0.2}, SensorSpec{1.0, 1.0, 0.5}};
  const int n = 40000;
  int hits = 0;
  int false_hits = 0;
  const double on = posterior(bank[0], true);
  for (int i = 0; i < n; ++i) {
    const ProbLabel present = sense(bank, Label{0}, rng);
    const ProbLabel absent = sense(bank, Label{}, rng);
    hits += present[0] == on;
    false_hits += absent[0] == on;
    CHECK(present[1] == 0.0);
    CHECK(absent[1] == 0.0);
  }
  // Binomial standard error is below 0.003 for both rates.
  CHECK(hits / double(n) == doctest::Approx(0.8).epsilon(0.02));
  CHECK(false_hits / double(n) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("label probability is a product of independent marginals") {
  const ProbLabel pl(Eigen::Vector3d(0.9, 0.2, 0.0));
  CHECK(label_probability(pl, Label{0}) == doctest::Approx(0.9 * 0.8));
  CHECK(label_probability(pl, Label{0, 1}) == doctest::Approx(0.9 * 0.2));
  CHECK(label_probability(pl, Label{2}) == 0.0);
  double total = 0.0;
  for (std::uint16_t b = 0; b < 8; ++b) total += label_probability(pl, Label(b));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
