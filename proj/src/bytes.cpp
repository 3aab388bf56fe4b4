#include "pseudoaka/bytes.hpp"
#include "pseudoaka/error.hpp"

namespace pseudoaka {

std::string_view
to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::width_violation:
      return "width-violation";
    case ErrorCode::unrenderable_pseudonym:
      return "unrenderable-pseudonym";
    case ErrorCode::malformed_suci:
      return "malformed-suci";
    case ErrorCode::unsupported_scheme:
      return "unsupported-scheme";
    case ErrorCode::decryption_failure:
      return "decryption-failure";
    case ErrorCode::mac_failure:
      return "mac-failure";
    case ErrorCode::unknown_subscriber:
      return "unknown-subscriber";
    case ErrorCode::pool_exhausted:
      return "pool-exhausted";
    case ErrorCode::unresolvable_cdr:
      return "unresolvable-cdr";
    case ErrorCode::counter_overflow:
      return "counter-overflow";
    case ErrorCode::config_error:
      return "config-error";
    case ErrorCode::invalid_argument:
      return "invalid-argument";
  }
  return "unknown-error";
}

std::string
to_hex(ByteView data)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

static int
hex_value(char c)
{
  if (c >= '0' && c <= '9') {
    return c - '0';
  }
  if (c >= 'a' && c <= 'f') {
    return c - 'a' + 10;
  }
  if (c >= 'A' && c <= 'F') {
    return c - 'A' + 10;
  }
  return -1;
}

Bytes
from_hex(std::string_view hex)
{
  if (hex.starts_with("0x") || hex.starts_with("0X")) {
    hex.remove_prefix(2);
  }
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("odd-length hex string");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); i++) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("invalid hex digit");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void
put_uint(Bytes& out, std::uint64_t value, std::size_t width)
{
  for (std::size_t i = 0; i < width; i++) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * (width - i - 1))));
  }
}

std::uint64_t
get_uint(ByteView in, std::size_t width)
{
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width; i++) {
    value = (value << 8) | in[i];
  }
  return value;
}

bool
constant_time_equal(ByteView a, ByteView b)
{
  if (a.size() != b.size()) {
    return false;
  }
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < a.size(); i++) {
    diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
  }
  return diff == 0;
}

} // namespace pseudoaka
