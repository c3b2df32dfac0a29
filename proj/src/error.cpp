#include "imblr/error.hpp"

namespace imblr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::MomentOverflow: return "MomentOverflow";
    case ErrorCode::SeparationSuspected: return "SeparationSuspected";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NoInteriorSolution: return "NoInteriorSolution";
    case ErrorCode::DegenerateHessian: return "DegenerateHessian";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LimitSolveFailed: return "LimitSolveFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace imblr
