#pragma once

#include <stdexcept>
#include <string>

namespace probirm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Sensor whose Bayes denominator vanishes for the requested reading.
class DegenerateSensorError : public Error {
 public:
  using Error::Error;
};

/// No confidence in [0,1] reaches the requested posterior.
class InfeasibleTargetError : public Error {
 public:
  using Error::Error;
};

class IllFormedMachineError : public Error {
 public:
  using Error::Error;
};

class InstanceTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Induction stopped at its time budget while strict mode was requested.
class BudgetExhaustedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace probirm
