#pragma once

#include <stdexcept>
#include <string>

namespace rotcouette {

/// Non-convergence, overflow or NaN in a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time integration failed (blow-up, NaN) at time().
class SimulationError : public NumericalError {
 public:
  SimulationError(const std::string& what, double time)
      : NumericalError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace rotcouette
