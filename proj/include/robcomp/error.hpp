#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robcomp {

enum class ErrorKind {
  ConvergenceFailure,
  ZeroVector,
  ZeroLeader,
  BadOrders,
  DegenerateSpread,
  NotSquare,
  DimensionMismatch,
  ShapeMismatch,
  ZeroMatrix,
  NonFinite,
  EmptyDataset,
  NonBinaryLabels,
  BadK,
  EmptyGrid,
  BadSpec,
  FormatError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace robcomp
