#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphot {

enum class ErrorCode {
  kDuplicateEdge,
  kSelfLoop,
  kNonpositiveWeight,
  kDisconnected,
  kIndexOutOfRange,
  kDimensionMismatch,
  kInvalidMeasure,
  kConvergenceFailure,
  kNotMeanZero,
  kNoConvergence,
  kInvalidCoupling,
  kPathNotConnectingPair,
  kNotAPath,
  kNotATree,
  kWeightRoleMismatch,
  kSingularSystem,
  kHorizonExceeded,
  kRuleMismatch,
  kInvalidCurve,
  kHypothesisFailure,
  kZeroMassRow,
  kRaggedRow,
  kNegativePixel,
  kDisconnectedKnn,
  kLengthMismatch,
  kShapeMismatch,
  kDegenerateRegressor,
  kInvalidArgument,
  kParseError,
  kIoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kSelfLoop: return "SelfLoop";
    case ErrorCode::kNonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidMeasure: return "InvalidMeasure";
    case ErrorCode::kConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::kNotMeanZero: return "NotMeanZero";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kInvalidCoupling: return "InvalidCoupling";
    case ErrorCode::kPathNotConnectingPair: return "PathNotConnectingPair";
    case ErrorCode::kNotAPath: return "NotAPath";
    case ErrorCode::kNotATree: return "NotATree";
    case ErrorCode::kWeightRoleMismatch: return "WeightRoleMismatch";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kHorizonExceeded: return "HorizonExceeded";
    case ErrorCode::kRuleMismatch: return "RuleMismatch";
    case ErrorCode::kInvalidCurve: return "InvalidCurve";
    case ErrorCode::kHypothesisFailure: return "HypothesisFailure";
    case ErrorCode::kZeroMassRow: return "ZeroMassRow";
    case ErrorCode::kRaggedRow: return "RaggedRow";
    case ErrorCode::kNegativePixel: return "NegativePixel";
    case ErrorCode::kDisconnectedKnn: return "DisconnectedKnn";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDegenerateRegressor: return "DegenerateRegressor";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and is what
/// callers (and the CLI exit-code mapping) should switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Solver non-convergence as opposed to bad input.
  bool is_convergence() const noexcept {
    return code_ == ErrorCode::kNoConvergence || code_ == ErrorCode::kConvergenceFailure ||
           code_ == ErrorCode::kHorizonExceeded;
  }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace graphot
