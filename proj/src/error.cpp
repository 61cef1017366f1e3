#include "qcert/error.hpp"

namespace qcert {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::MissingTailBound: return "MissingTailBound";
    case ErrorCode::IncompatibleTail: return "IncompatibleTail";
    case ErrorCode::NotMarkov: return "NotMarkov";
    case ErrorCode::DoeblinViolated: return "DoeblinViolated";
    case ErrorCode::NotDominated: return "NotDominated";
    case ErrorCode::NotUniformlyIntegrable: return "NotUniformlyIntegrable";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::SizeLimit: return "SizeLimit";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EnvelopeViolated: return "EnvelopeViolated";
    case ErrorCode::NotAKernel: return "NotAKernel";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace qcert
