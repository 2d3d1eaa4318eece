#pragma once

#include <stdexcept>
#include <string>

namespace recouple {

/// A degree exceeds the configured coefficient capacity (J_max).
struct CapacityError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A basis or phase convention check failed. Always indicates a bug, never bad input.
struct ConventionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// An edge whose length is below the configured epsilon in a mode that divides by it.
struct DegenerateEdgeError : std::domain_error {
  DegenerateEdgeError(long i, long j, double length)
      : std::domain_error("degenerate edge (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") with length " + std::to_string(length)),
        source(i), target(j) {}
  long source;
  long target;
};

/// A numerical construction (least-squares fit, calibration) could not be completed reliably.
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace recouple
