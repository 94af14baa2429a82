#pragma once

#include <stdexcept>

namespace hypstab {

/// Time step too large to resolve the shortest boundary transit.
struct CflViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A characteristic root lies (numerically) on the search contour; the
/// rectangle must be shifted before the winding count is meaningful.
struct RootOnBoundary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PositivityViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularResolvent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// History data does not cover the full delay window [-1, 0].
struct HistoryGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hypstab
