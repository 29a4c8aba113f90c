#include "provsumm/errors.hpp"

namespace provsumm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "E_PARSE";
    case ErrorCode::safety: return "E_SAFETY";
    case ErrorCode::schema: return "E_SCHEMA";
    case ErrorCode::data: return "E_DATA";
    case ErrorCode::question: return "E_QUESTION";
    case ErrorCode::config: return "E_CONFIG";
    case ErrorCode::empty_domain: return "E_EMPTY_DOMAIN";
    case ErrorCode::empty_provenance: return "E_EMPTY_PROVENANCE";
    case ErrorCode::oversample_cap: return "E_OVERSAMPLE_CAP";
    case ErrorCode::feasibility_cap: return "E_FEASIBILITY_CAP";
    case ErrorCode::io: return "E_IO";
  }
  return "E_UNKNOWN";
}

void fail(ErrorCode code, const std::string& message) {
  throw EngineError(code, message);
}

}  // namespace provsumm
