#include "pflux/error.hpp"

namespace pflux {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainTooSmall: return "DomainTooSmall";
    case ErrorCode::UnknownOutlet: return "UnknownOutlet";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorCode::SectionNotAligned: return "SectionNotAligned";
    case ErrorCode::FluxImbalance: return "FluxImbalance";
    case ErrorCode::CutoffTooWide: return "CutoffTooWide";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::DegeneratePunctures: return "DegeneratePunctures";
    case ErrorCode::InvalidProbe: return "InvalidProbe";
    case ErrorCode::UnsupportedExponent: return "UnsupportedExponent";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::NonlinearDivergence: return "NonlinearDivergence";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace pflux
