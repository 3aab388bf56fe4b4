#include "pseudoaka/codec.hpp"
#include "pseudoaka/error.hpp"

#include <algorithm>

namespace pseudoaka {

static bool
all_digits(std::string_view s)
{
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void
NetworkId::validate() const
{
  if (mcc.size() != 3 || !all_digits(mcc)) {
    throw ProtocolError(ErrorCode::config_error, "MCC must be 3 digits: '" + mcc + "'");
  }
  if ((mnc.size() != 2 && mnc.size() != 3) || !all_digits(mnc)) {
    throw ProtocolError(ErrorCode::config_error, "MNC must be 2 or 3 digits: '" + mnc + "'");
  }
}

Imsi::Imsi(NetworkId hn, std::uint64_t msin)
  : network_(std::move(hn))
  , msin_(msin)
{
  network_.validate();
  if (network_.mnc.size() != 2) {
    throw ProtocolError(ErrorCode::config_error, "a 10-digit MSIN requires a 2-digit MNC");
  }
  if (msin_ >= msin_space) {
    throw ProtocolError(ErrorCode::unrenderable_pseudonym, "MSIN exceeds 10 digits");
  }
}

Imsi
Imsi::parse(std::string_view digits)
{
  if (digits.size() != 15 || !all_digits(digits)) {
    throw ProtocolError(ErrorCode::invalid_argument, "IMSI must be 15 digits: '" + std::string(digits) + "'");
  }
  NetworkId hn{ std::string(digits.substr(0, 3)), std::string(digits.substr(3, 2)) };
  return Imsi(std::move(hn), std::stoull(std::string(digits.substr(5))));
}

std::string
format_msin(std::uint64_t msin)
{
  std::string s = std::to_string(msin);
  if (s.size() < msin_digits) {
    s.insert(0, msin_digits - s.size(), '0');
  }
  return s;
}

std::string
Imsi::msin_string() const
{
  return format_msin(msin_);
}

std::string
Imsi::to_string() const
{
  return network_.to_string() + msin_string();
}

Block128
encode_rand_payload(const RandPayload& payload)
{
  if (payload.pseudonym >> pseudonym_bits) {
    throw ProtocolError(ErrorCode::width_violation, "pseudonym exceeds 34 bits");
  }
  if (payload.counter >> counter_bits) {
    throw ProtocolError(ErrorCode::width_violation, "counter exceeds 24 bits");
  }
  if (payload.ecf >> ecf_bits) {
    throw ProtocolError(ErrorCode::width_violation, "ECF exceeds 2 bits");
  }
  if (payload.salt >> salt_bits) {
    throw ProtocolError(ErrorCode::width_violation, "salt exceeds 68 bits");
  }

  u128 word = payload.pseudonym;
  word = (word << counter_bits) | payload.counter;
  word = (word << ecf_bits) | payload.ecf;
  word = (word << salt_bits) | payload.salt;

  Block128 out{};
  for (int i = 15; i >= 0; i--) {
    out[i] = static_cast<std::uint8_t>(word);
    word >>= 8;
  }
  return out;
}

RandPayload
decode_rand_payload(const Block128& block)
{
  u128 word = 0;
  for (auto b : block) {
    word = (word << 8) | b;
  }

  RandPayload out;
  out.salt = word & salt_mask;
  word >>= salt_bits;
  out.ecf = static_cast<std::uint8_t>(word & ((1u << ecf_bits) - 1));
  word >>= ecf_bits;
  out.counter = static_cast<std::uint32_t>(word & counter_max);
  word >>= counter_bits;
  out.pseudonym = static_cast<std::uint64_t>(word);
  return out;
}

Imsi
render_pseudonym(std::uint64_t raw, const NetworkId& hn)
{
  if (raw >= msin_space) {
    throw ProtocolError(ErrorCode::unrenderable_pseudonym,
                        "pseudonym " + std::to_string(raw) + " does not fit 10 decimal digits");
  }
  return Imsi(hn, raw);
}

Bytes
encode_msin_bcd(std::uint64_t msin)
{
  if (msin >= msin_space) {
    throw ProtocolError(ErrorCode::width_violation, "MSIN exceeds 10 digits");
  }
  Bytes out(5);
  for (int i = 4; i >= 0; i--) {
    const auto lo = msin % 10;
    msin /= 10;
    const auto hi = msin % 10;
    msin /= 10;
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::uint64_t
decode_msin_bcd(ByteView bcd)
{
  if (bcd.size() != 5) {
    throw ProtocolError(ErrorCode::malformed_suci, "MSIN must be 5 BCD bytes");
  }
  std::uint64_t msin = 0;
  for (auto b : bcd) {
    const unsigned hi = b >> 4;
    const unsigned lo = b & 0x0f;
    if (hi > 9 || lo > 9) {
      throw ProtocolError(ErrorCode::malformed_suci, "invalid BCD digit in MSIN");
    }
    msin = msin * 100 + hi * 10 + lo;
  }
  return msin;
}

Bytes
suci_mac_input(std::uint64_t msin, std::uint32_t delta_min, std::uint32_t delta_max)
{
  if (delta_min > counter_max || delta_max > counter_max) {
    throw ProtocolError(ErrorCode::width_violation, "SUCI counter exceeds 24 bits");
  }
  Bytes out = encode_msin_bcd(msin);
  put_uint(out, delta_min, 3);
  put_uint(out, delta_max, 3);
  return out;
}

SuciPlaintextBytes
encode_suci_plaintext(const SuciPlaintext& pt)
{
  Bytes raw = suci_mac_input(pt.msin, pt.delta_min, pt.delta_max);
  put_uint(raw, pt.tag, 8);
  SuciPlaintextBytes out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

SuciPlaintext
decode_suci_plaintext(ByteView bytes)
{
  if (bytes.size() != suci_plaintext_size) {
    throw ProtocolError(ErrorCode::malformed_suci, "SUCI plaintext must be 19 bytes");
  }
  SuciPlaintext pt;
  pt.msin = decode_msin_bcd(bytes.subspan(0, 5));
  pt.delta_min = static_cast<std::uint32_t>(get_uint(bytes.subspan(5), 3));
  pt.delta_max = static_cast<std::uint32_t>(get_uint(bytes.subspan(8), 3));
  pt.tag = get_uint(bytes.subspan(11), 8);
  return pt;
}

static std::size_t
scheme_output_size(std::uint8_t supipsi)
{
  switch (static_cast<ProtectionScheme>(supipsi)) {
    case ProtectionScheme::null_scheme:
      return 5;
    case ProtectionScheme::hybrid_x25519:
      return hybrid_ciphertext_size;
  }
  throw ProtocolError(ErrorCode::unsupported_scheme, "SUPIPSI " + std::to_string(supipsi));
}

Bytes
encode_suci(const Suci& suci)
{
  suci.hnid.validate();
  const auto& mcc = suci.hnid.mcc;
  const auto& mnc = suci.hnid.mnc;
  const auto digit = [](char c) { return static_cast<std::uint8_t>(c - '0'); };
  const std::uint8_t mnc3 = mnc.size() == 3 ? digit(mnc[2]) : 0x0f;

  if (suci.ciphertext.size() != scheme_output_size(suci.supipsi)) {
    throw ProtocolError(ErrorCode::malformed_suci, "ciphertext length does not match the scheme");
  }

  Bytes out;
  out.reserve(suci_header_size + suci.ciphertext.size());
  out.push_back(static_cast<std::uint8_t>((digit(mcc[0]) << 4) | digit(mcc[1])));
  out.push_back(static_cast<std::uint8_t>((digit(mcc[2]) << 4) | digit(mnc[0])));
  out.push_back(static_cast<std::uint8_t>((digit(mnc[1]) << 4) | mnc3));
  out.push_back(suci.hnpki);
  out.push_back(suci.supipsi);
  out.insert(out.end(), suci.ciphertext.begin(), suci.ciphertext.end());
  return out;
}

Suci
decode_suci(ByteView bytes)
{
  if (bytes.size() < suci_header_size) {
    throw ProtocolError(ErrorCode::malformed_suci, "SUCI shorter than its header");
  }

  std::string digits;
  for (std::size_t i = 0; i < 3; i++) {
    for (unsigned nibble : { unsigned(bytes[i] >> 4), unsigned(bytes[i] & 0x0f) }) {
      if (nibble <= 9) {
        digits.push_back(static_cast<char>('0' + nibble));
      } else if (!(i == 2 && nibble == 0x0f && digits.size() == 5)) {
        throw ProtocolError(ErrorCode::malformed_suci, "invalid BCD nibble in HNID");
      }
    }
  }

  Suci suci;
  suci.hnid = NetworkId{ digits.substr(0, 3), digits.substr(3) };
  suci.hnpki = bytes[3];
  suci.supipsi = bytes[4];

  const auto expected = scheme_output_size(suci.supipsi);
  if (bytes.size() != suci_header_size + expected) {
    throw ProtocolError(ErrorCode::malformed_suci,
                        "scheme output is " + std::to_string(bytes.size() - suci_header_size) + " bytes, expected " +
                          std::to_string(expected));
  }
  suci.ciphertext.assign(bytes.begin() + suci_header_size, bytes.end());
  if (suci.supipsi == static_cast<std::uint8_t>(ProtectionScheme::null_scheme)) {
    decode_msin_bcd(suci.ciphertext);
  }
  return suci;
}

Suci
make_null_scheme_suci(const NetworkId& hn, std::uint64_t msin)
{
  Suci suci;
  suci.hnid = hn;
  suci.hnpki = 0;
  suci.supipsi = static_cast<std::uint8_t>(ProtectionScheme::null_scheme);
  suci.ciphertext = encode_msin_bcd(msin);
  return suci;
}

} // namespace pseudoaka
