#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pseudoaka {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// A 128-bit value in network (MSB-first) byte order.
using Block128 = std::array<std::uint8_t, 16>;

using Key128 = std::array<std::uint8_t, 16>;
using Key256 = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

template<std::size_t N>
std::array<std::uint8_t, N>
array_from_hex(std::string_view hex)
{
  const auto raw = from_hex(hex);
  if (raw.size() != N) {
    throw std::invalid_argument("hex string has wrong length");
  }
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

/// Writes the low `width` bytes of `value` MSB-first.
void put_uint(Bytes& out, std::uint64_t value, std::size_t width);
std::uint64_t get_uint(ByteView in, std::size_t width);

inline Bytes
concat(std::initializer_list<ByteView> parts)
{
  Bytes out;
  for (auto part : parts) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

/// Constant-time equality for equal-length inputs; unequal lengths compare false.
bool constant_time_equal(ByteView a, ByteView b);

} // namespace pseudoaka
