#pragma once

#include <stdexcept>
#include <string>

namespace provsumm {

enum class ErrorCode {
  parse,
  safety,
  schema,
  data,
  question,
  config,
  empty_domain,
  empty_provenance,
  oversample_cap,
  feasibility_cap,
  io,
};

const char* error_code_name(ErrorCode code);

class EngineError : public std::runtime_error {
 public:
  EngineError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace provsumm
