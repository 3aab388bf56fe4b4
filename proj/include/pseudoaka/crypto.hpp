#pragma once

#include "pseudoaka/bytes.hpp"
#include "pseudoaka/codec.hpp"
#include "pseudoaka/random.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>

// Cryptographic primitives. Everything here is internally consistent but
// deliberately not bit-compatible with MILENAGE or the standardized SUCI
// profiles; the protocol layers depend only on these interfaces.

namespace pseudoaka::crypto {

/// Subscriber master key K, shared by the USIM and the home network.
struct MasterKey
{
  Key128 bytes{};
  friend bool operator==(const MasterKey&, const MasterKey&) = default;
};

/// kappa: the key that encrypts pseudonym payloads into RAND.
struct PseudonymKey
{
  Key128 bytes{};
  friend bool operator==(const PseudonymKey&, const PseudonymKey&) = default;
};

PseudonymKey derive_pseudonym_key(const MasterKey& k);

/// One block-cipher invocation under kappa: a permutation of 128-bit blocks.
Block128 encrypt_rand(const PseudonymKey& kappa, const Block128& payload);
Block128 decrypt_rand(const PseudonymKey& kappa, const Block128& rand);

/// HMAC-SHA-256 under K truncated to 64 bits, read MSB-first.
std::uint64_t mac(const MasterKey& k, ByteView message);

inline constexpr std::uint16_t default_amf = 0x8000;

using Mac64 = std::array<std::uint8_t, 8>;
using Ak48 = std::array<std::uint8_t, 6>;

/// f1..f5. f1 covers (RAND, SQN, AMF); f2..f5 depend on RAND only so the UE
/// can unmask SQN before checking MAC-A.
struct AkaOutputs
{
  Mac64 mac_a{};
  Mac64 xres{};
  Key256 ck_ik{};
  Ak48 ak{};
};

AkaOutputs aka_functions(const MasterKey& k, const Block128& rand, std::uint64_t sqn, std::uint16_t amf);

enum class Flavor
{
  lte,
  fiveg,
};

std::string_view to_string(Flavor f);

/// K_ASME (LTE) or K_SEAF (5G). When msin_binding is set the MSIN is an
/// extra KDF input; both ends agree only if both bind the same MSIN.
Key256 derive_session_keys(const Key256& ck_ik,
                           std::string_view serving_net_id,
                           Flavor flavor,
                           std::optional<std::uint64_t> msin_binding);

using ResStar = std::array<std::uint8_t, 16>;

/// RES* = KDF(CK||IK; SN id, RAND, RES), truncated to 128 bits.
ResStar derive_res_star(const Key256& ck_ik, std::string_view serving_net_id, const Block128& rand, const Mac64& res);

/// HRES* = SHA-256(RAND || RES*) truncated to 128 bits.
Block128 hres_star(const Block128& rand, ByteView res_star);

/// Short MAC over a session key, used as the key-confirmation check that
/// follows a successful challenge-response.
Mac64 key_confirmation(const Key256& session_key, std::string_view label);

Key256 kdf(ByteView key, std::string_view label, ByteView input);

// --- hybrid public-key encryption for SUCI ---------------------------------

struct HnKeyPair
{
  Key256 public_key{};
  Key256 private_key{};
};

HnKeyPair generate_hn_keypair(Rng& rng);
Key256 x25519_public_from_private(const Key256& private_key);

/// A SUPI protection scheme: probabilistic encryption of the 19-byte SUCI
/// plaintext. Randomness comes from the injected Rng.
class PkeScheme
{
public:
  virtual ~PkeScheme() = default;
  virtual ProtectionScheme id() const = 0;
  virtual Bytes encrypt(const Key256& public_key, const SuciPlaintextBytes& plaintext, Rng& rng) const = 0;
  /// Throws decryption_failure on a bad tag or malformed key share.
  virtual SuciPlaintextBytes decrypt(const Key256& private_key, ByteView ciphertext) const = 0;
};

/// Ephemeral X25519 agreement, X9.63 SHA-256 KDF, AES-128-CTR and
/// HMAC-SHA-256 truncated to 64 bits.
class X25519Scheme : public PkeScheme
{
public:
  ProtectionScheme id() const override { return ProtectionScheme::hybrid_x25519; }
  Bytes encrypt(const Key256& public_key, const SuciPlaintextBytes& plaintext, Rng& rng) const override;
  SuciPlaintextBytes decrypt(const Key256& private_key, ByteView ciphertext) const override;
};

Bytes pke_encrypt(const Key256& public_key, const SuciPlaintextBytes& plaintext, Rng& rng);
SuciPlaintextBytes pke_decrypt(const Key256& private_key, ByteView ciphertext);

/// Schemes keyed by (HNPKI, SUPIPSI).
class SuiteRegistry
{
public:
  /// Registry preloaded with the X25519 scheme under the given HNPKI.
  static SuiteRegistry with_defaults(std::uint8_t hnpki);

  void add(std::uint8_t hnpki, std::shared_ptr<const PkeScheme> scheme);
  /// Throws unsupported_scheme when nothing is registered under the pair.
  const PkeScheme& find(std::uint8_t hnpki, std::uint8_t supipsi) const;

private:
  std::map<std::pair<std::uint8_t, std::uint8_t>, std::shared_ptr<const PkeScheme>> schemes_;
};

} // namespace pseudoaka::crypto
