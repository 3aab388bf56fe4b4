#pragma once

#include "pseudoaka/bytes.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

// Bit-exact encodings: identifiers, the 128-bit RAND payload and SUCI.
// All multi-byte fields are MSB-first.

namespace pseudoaka {

using u128 = unsigned __int128;

inline constexpr unsigned pseudonym_bits = 34;
inline constexpr unsigned counter_bits = 24;
inline constexpr unsigned ecf_bits = 2;
inline constexpr unsigned salt_bits = 68;
static_assert(pseudonym_bits + counter_bits + ecf_bits + salt_bits == 128);

inline constexpr std::uint64_t msin_digits = 10;
inline constexpr std::uint64_t msin_space = 10'000'000'000ULL;
inline constexpr std::uint32_t counter_max = (1u << counter_bits) - 1;

/// Zero-padded 10-digit decimal rendering of an MSIN value.
std::string format_msin(std::uint64_t msin);

/// Home network identifier: MCC (3 digits) and MNC (2 or 3 digits).
struct NetworkId
{
  std::string mcc;
  std::string mnc;

  /// Throws config_error unless both parts are well-formed digit strings.
  void validate() const;
  std::string to_string() const { return mcc + mnc; }
  friend bool operator==(const NetworkId&, const NetworkId&) = default;
};

/// A 15-digit IMSI with a fixed 10-digit MSIN (so the MNC has 2 digits).
class Imsi
{
public:
  Imsi() = default;
  Imsi(NetworkId hn, std::uint64_t msin);

  /// Parses "MCC MNC MSIN" as 15 contiguous digits.
  static Imsi parse(std::string_view digits);

  const NetworkId& network() const { return network_; }
  std::uint64_t msin() const { return msin_; }
  std::string msin_string() const;
  std::string to_string() const;

  friend auto operator<=>(const Imsi& a, const Imsi& b)
  {
    if (auto c = a.network_.mcc <=> b.network_.mcc; c != 0) {
      return c;
    }
    if (auto c = a.network_.mnc <=> b.network_.mnc; c != 0) {
      return c;
    }
    return a.msin_ <=> b.msin_;
  }
  friend bool operator==(const Imsi&, const Imsi&) = default;

private:
  NetworkId network_{ "001", "01" };
  std::uint64_t msin_ = 0;
};

/// (pseudonym value, counter d): one element of P_UE / P_HN or a slot.
struct PseudonymEntry
{
  std::uint64_t value = 0;
  std::uint32_t counter = 0;

  friend auto operator<=>(const PseudonymEntry&, const PseudonymEntry&) = default;
};

/// Plaintext carried inside RAND: p (34) | d (24) | ECF (2) | salt (68).
struct RandPayload
{
  std::uint64_t pseudonym = 0;
  std::uint32_t counter = 0;
  std::uint8_t ecf = 0;
  u128 salt = 0;

  friend bool operator==(const RandPayload&, const RandPayload&) = default;
};

inline constexpr u128 salt_mask = (u128{ 1 } << salt_bits) - 1;

/// Throws width_violation when a field exceeds its width.
Block128 encode_rand_payload(const RandPayload& payload);
RandPayload decode_rand_payload(const Block128& block);

/// Renders a raw pseudonym as an IMSI under the home network's MCC/MNC.
/// Throws unrenderable_pseudonym when raw >= 10^10.
Imsi render_pseudonym(std::uint64_t raw, const NetworkId& hn);

/// MSIN (10 BCD digits) | delta_min (24) | delta_max (24) | T (64): 19 bytes.
struct SuciPlaintext
{
  std::uint64_t msin = 0;
  std::uint32_t delta_min = 0;
  std::uint32_t delta_max = 0;
  std::uint64_t tag = 0;

  friend bool operator==(const SuciPlaintext&, const SuciPlaintext&) = default;
};

inline constexpr std::size_t suci_plaintext_size = 19;
using SuciPlaintextBytes = std::array<std::uint8_t, suci_plaintext_size>;

SuciPlaintextBytes encode_suci_plaintext(const SuciPlaintext& pt);
SuciPlaintext decode_suci_plaintext(ByteView bytes);

/// The MAC input MSIN || delta_min || delta_max (first 11 plaintext bytes).
Bytes suci_mac_input(std::uint64_t msin, std::uint32_t delta_min, std::uint32_t delta_max);

/// 10-digit MSIN as 5 BCD bytes, first digit in the high nibble.
Bytes encode_msin_bcd(std::uint64_t msin);
std::uint64_t decode_msin_bcd(ByteView bcd);

enum class ProtectionScheme : std::uint8_t
{
  null_scheme = 0x00,
  hybrid_x25519 = 0x01,
};

/// X25519 share (32) | encrypted plaintext (19) | truncated tag (8).
inline constexpr std::size_t hybrid_ciphertext_size = 32 + suci_plaintext_size + 8;
inline constexpr std::size_t suci_header_size = 5;

struct Suci
{
  NetworkId hnid;
  std::uint8_t hnpki = 0;
  std::uint8_t supipsi = 0;
  Bytes ciphertext;

  friend bool operator==(const Suci&, const Suci&) = default;
};

/// Header: 6 BCD nibbles of MCC||MNC (0xF pads a 2-digit MNC), HNPKI,
/// SUPIPSI; then the scheme output.
Bytes encode_suci(const Suci& suci);

/// Throws malformed_suci on truncation or bad lengths and unsupported_scheme
/// on an unknown SUPIPSI.
Suci decode_suci(ByteView bytes);

/// Null-scheme SUCI carrying the MSIN in clear.
Suci make_null_scheme_suci(const NetworkId& hn, std::uint64_t msin);

} // namespace pseudoaka
