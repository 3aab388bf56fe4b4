#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pseudoaka {

enum class ErrorCode
{
  width_violation,
  unrenderable_pseudonym,
  malformed_suci,
  unsupported_scheme,
  decryption_failure,
  mac_failure,
  unknown_subscriber,
  pool_exhausted,
  unresolvable_cdr,
  counter_overflow,
  config_error,
  invalid_argument,
};

std::string_view to_string(ErrorCode code);

class ProtocolError : public std::runtime_error
{
public:
  ProtocolError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what)
    , code_(code)
  {
  }

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace pseudoaka
