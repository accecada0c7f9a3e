#include "cmdual/error.hpp"

namespace cmdual {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidMeasure: return "InvalidMeasure";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::OrderExceeded: return "OrderExceeded";
    case ErrorKind::TailDivergent: return "TailDivergent";
    case ErrorKind::NotVanishing: return "NotVanishing";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::DualInfinite: return "DualInfinite";
    case ErrorKind::DivergentMoment: return "DivergentMoment";
    case ErrorKind::PolytopeEmpty: return "PolytopeEmpty";
    case ErrorKind::EnvelopeViolation: return "EnvelopeViolation";
    case ErrorKind::ConstantRRA: return "ConstantRRA";
  }
  return "Unknown";
}

}  // namespace cmdual
