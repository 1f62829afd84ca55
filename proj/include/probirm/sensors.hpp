#pragma once

// Binary proposition sensors with sensitivity/specificity and the Bayes
// posterior they induce.

#include "probirm/events.hpp"

#include <vector>

namespace probirm {

struct SensorSpec {
  double sensitivity = 1.0;  // P(detect | occurred)
  double specificity = 1.0;  // P(no detect | not occurred)
  double prior = 0.5;        // P(occurred) at a random transition

  static SensorSpec with_confidence(double confidence, double prior) {
    return {confidence, confidence, prior};
  }
};

/// One sensor per proposition, indexed by proposition id.
using SensorBank = std::vector<SensorSpec>;

/// P(occurred | reading). Throws DegenerateSensorError when the reading has
/// probability zero under the spec.
double posterior(const SensorSpec& spec, bool detected);

/// Confidence c such that sensitivity = specificity = c yields a posterior of
/// `target` after a detection. Throws InfeasibleTargetError if no c in [0,1]
/// exists.
double solve_confidence(double prior, double target);

/// Noisy labelling: draws an independent reading per proposition and reports
/// its posterior.
ProbLabel sense(const SensorBank& bank, Label ground_truth, Rng& rng);

/// Probability of `candidate` being the true label under independent
/// per-proposition posteriors.
template <typename Scalar = double>
Scalar label_probability(const ProbLabel& pl, Label candidate) {
  Scalar p(1);
  for (std::size_t i = 0; i < pl.size(); ++i) {
    const Scalar q(pl.probs[static_cast<Eigen::Index>(i)]);
    p *= candidate.contains(static_cast<PropId>(i)) ? q : Scalar(1) - q;
  }
  return p;
}

}  // namespace probirm
