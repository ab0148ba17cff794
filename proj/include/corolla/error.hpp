#pragma once

#include <stdexcept>
#include <string>

namespace corolla {

// Error taxonomy shared by all modules. Codes let tests distinguish failure
// modes without parsing messages.
enum class ErrorCode {
    invalid_argument,
    validation,
    missing_file,
    io,
    bad_magic,
    bad_header,
    payload_mismatch,
    non_finite,
    shape_mismatch,
    infeasible,
    numeric,
    degenerate_batch,
    unsupported,
    guard,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

}  // namespace corolla
