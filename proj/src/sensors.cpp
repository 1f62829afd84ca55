#include "probirm/sensors.hpp"

#include "probirm/error.hpp"

#include <string>

namespace probirm {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ContractViolation(std::string(what) + " outside [0,1]: " + format_double(v));
  }
}

}  // namespace

double posterior(const SensorSpec& spec, bool detected) {
  check_unit(spec.sensitivity, "sensitivity");
  check_unit(spec.specificity, "specificity");
  check_unit(spec.prior, "prior");
  const double given_true = detected ? spec.sensitivity : 1.0 - spec.sensitivity;
  const double given_false = detected ? 1.0 - spec.specificity : spec.specificity;
  const double num = given_true * spec.prior;
  const double den = num + given_false * (1.0 - spec.prior);
  if (den <= 0.0) {
    throw DegenerateSensorError(std::string("sensor reading '") + (detected ? "detected" : "absent") +
                                "' has zero probability");
  }
  return num / den;
}

double solve_confidence(double prior, double target) {
  if (!(prior > 0.0 && prior < 1.0)) {
    throw InfeasibleTargetError("prior must lie in (0,1), got " + format_double(prior));
  }
  if (!(target > 0.0 && target <= 1.0)) {
    throw InfeasibleTargetError("target posterior must lie in (0,1], got " + format_double(target));
  }
  // posterior(c) = c p / (c p + (1-c)(1-p)) = t  <=>  c = t(1-p) / (p + t - 2pt)
  const double den = prior + target - 2.0 * prior * target;
  if (den == 0.0) throw InfeasibleTargetError("target posterior unreachable for this prior");
  const double c = target * (1.0 - prior) / den;
  if (!(c >= 0.0 && c <= 1.0)) {
    throw InfeasibleTargetError("target posterior " + format_double(target) + " needs confidence " +
                                format_double(c) + " outside [0,1] at prior " + format_double(prior));
  }
  return c;
}

ProbLabel sense(const SensorBank& bank, Label ground_truth, Rng& rng) {
  Eigen::VectorXd probs(static_cast<Eigen::Index>(bank.size()));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& spec = bank[i];
    const bool occurred = ground_truth.contains(static_cast<PropId>(i));
    const double p_detect = occurred ? spec.sensitivity : 1.0 - spec.specificity;
    const bool detected = unit(rng) < p_detect;
    probs[static_cast<Eigen::Index>(i)] = posterior(spec, detected);
  }
  return ProbLabel(std::move(probs));
}

}  // namespace probirm
