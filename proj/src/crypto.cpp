#include "pseudoaka/crypto.hpp"
#include "pseudoaka/error.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstring>
#include <stdexcept>

namespace pseudoaka::crypto {

namespace {

struct CipherCtxDeleter
{
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct PkeyDeleter
{
  void operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }
};
struct PkeyCtxDeleter
{
  void operator()(EVP_PKEY_CTX* ctx) const { EVP_PKEY_CTX_free(ctx); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

[[noreturn]] void
openssl_failure(const char* what)
{
  throw std::runtime_error(std::string("OpenSSL failure: ") + what);
}

Block128
aes128_block(const Key128& key, const Block128& in, bool encrypt)
{
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_CipherInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, key.data(), nullptr, encrypt ? 1 : 0) != 1) {
    openssl_failure("AES init");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  Block128 out{};
  int len = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1 || len != 16) {
    openssl_failure("AES block");
  }
  return out;
}

Bytes
aes128_ctr(ByteView key, ByteView icb, ByteView in)
{
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, key.data(), icb.data()) != 1) {
    openssl_failure("AES-CTR init");
  }
  Bytes out(in.size());
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1) {
    openssl_failure("AES-CTR");
  }
  return out;
}

std::array<std::uint8_t, 32>
hmac_sha256(ByteView key, ByteView message)
{
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(), &len) ==
        nullptr ||
      len != out.size()) {
    openssl_failure("HMAC");
  }
  return out;
}

std::array<std::uint8_t, 32>
sha256(ByteView message)
{
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(message.data(), message.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    openssl_failure("SHA-256");
  }
  return out;
}

ByteView
as_bytes(std::string_view s)
{
  return { reinterpret_cast<const std::uint8_t*>(s.data()), s.size() };
}

Bytes
tagged(std::string_view label, std::initializer_list<ByteView> parts)
{
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(label.size()));
  out.insert(out.end(), label.begin(), label.end());
  for (auto part : parts) {
    put_uint(out, part.size(), 2);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Pkey
x25519_private(const Key256& private_key)
{
  Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, private_key.data(), private_key.size()));
  if (!key) {
    openssl_failure("X25519 private key");
  }
  return key;
}

Key256
x25519_public(EVP_PKEY* key)
{
  Key256 out{};
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(key, out.data(), &len) != 1 || len != out.size()) {
    openssl_failure("X25519 public key");
  }
  return out;
}

/// Returns nullopt when the peer share is unusable (e.g. a low-order point).
std::optional<Key256>
x25519_agree(const Key256& private_key, ByteView peer_public)
{
  auto priv = x25519_private(private_key);
  Pkey peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(), peer_public.size()));
  if (!peer) {
    return std::nullopt;
  }
  PkeyCtx ctx(EVP_PKEY_CTX_new(priv.get(), nullptr));
  Key256 shared{};
  std::size_t len = shared.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 || len != shared.size()) {
    return std::nullopt;
  }
  return shared;
}

/// ANSI X9.63 KDF with SHA-256; 64 bytes = AES key | ICB | MAC key.
std::array<std::uint8_t, 64>
x963_kdf(const Key256& shared, ByteView shared_info)
{
  std::array<std::uint8_t, 64> out{};
  for (std::uint32_t counter = 1; counter <= 2; counter++) {
    Bytes input(shared.begin(), shared.end());
    put_uint(input, counter, 4);
    input.insert(input.end(), shared_info.begin(), shared_info.end());
    const auto block = sha256(input);
    std::copy(block.begin(), block.end(), out.begin() + 32 * (counter - 1));
  }
  return out;
}

} // namespace

std::string_view
to_string(Flavor f)
{
  return f == Flavor::lte ? "lte" : "5g";
}

Key256
kdf(ByteView key, std::string_view label, ByteView input)
{
  return hmac_sha256(key, tagged(label, { input }));
}

PseudonymKey
derive_pseudonym_key(const MasterKey& k)
{
  const auto digest = hmac_sha256(k.bytes, tagged("pseudonym-key", {}));
  PseudonymKey kappa;
  std::copy_n(digest.begin(), kappa.bytes.size(), kappa.bytes.begin());
  return kappa;
}

Block128
encrypt_rand(const PseudonymKey& kappa, const Block128& payload)
{
  return aes128_block(kappa.bytes, payload, true);
}

Block128
decrypt_rand(const PseudonymKey& kappa, const Block128& rand)
{
  return aes128_block(kappa.bytes, rand, false);
}

std::uint64_t
mac(const MasterKey& k, ByteView message)
{
  const auto digest = hmac_sha256(k.bytes, tagged("suci-mac", { message }));
  return get_uint(digest, 8);
}

AkaOutputs
aka_functions(const MasterKey& k, const Block128& rand, std::uint64_t sqn, std::uint16_t amf)
{
  Bytes sqn_amf;
  put_uint(sqn_amf, sqn, 6);
  put_uint(sqn_amf, amf, 2);

  AkaOutputs out;
  const auto f1 = hmac_sha256(k.bytes, tagged("f1", { rand, sqn_amf }));
  const auto f2 = hmac_sha256(k.bytes, tagged("f2", { rand }));
  const auto f3 = hmac_sha256(k.bytes, tagged("f3", { rand }));
  const auto f4 = hmac_sha256(k.bytes, tagged("f4", { rand }));
  const auto f5 = hmac_sha256(k.bytes, tagged("f5", { rand }));
  std::copy_n(f1.begin(), out.mac_a.size(), out.mac_a.begin());
  std::copy_n(f2.begin(), out.xres.size(), out.xres.begin());
  std::copy_n(f3.begin(), 16, out.ck_ik.begin());
  std::copy_n(f4.begin(), 16, out.ck_ik.begin() + 16);
  std::copy_n(f5.begin(), out.ak.size(), out.ak.begin());
  return out;
}

Key256
derive_session_keys(const Key256& ck_ik,
                    std::string_view serving_net_id,
                    Flavor flavor,
                    std::optional<std::uint64_t> msin_binding)
{
  Bytes binding;
  if (msin_binding) {
    binding = encode_msin_bcd(*msin_binding);
  }
  const auto label = flavor == Flavor::lte ? "k-asme" : "k-seaf";
  return hmac_sha256(ck_ik, tagged(label, { as_bytes(serving_net_id), binding }));
}

ResStar
derive_res_star(const Key256& ck_ik, std::string_view serving_net_id, const Block128& rand, const Mac64& res)
{
  const auto digest = hmac_sha256(ck_ik, tagged("res-star", { as_bytes(serving_net_id), rand, res }));
  ResStar out{};
  std::copy_n(digest.begin(), out.size(), out.begin());
  return out;
}

Block128
hres_star(const Block128& rand, ByteView res_star)
{
  const auto digest = sha256(concat({ rand, res_star }));
  Block128 out{};
  std::copy_n(digest.begin(), out.size(), out.begin());
  return out;
}

Mac64
key_confirmation(const Key256& session_key, std::string_view label)
{
  const auto digest = hmac_sha256(session_key, tagged(label, {}));
  Mac64 out{};
  std::copy_n(digest.begin(), out.size(), out.begin());
  return out;
}

Key256
x25519_public_from_private(const Key256& private_key)
{
  auto key = x25519_private(private_key);
  return x25519_public(key.get());
}

HnKeyPair
generate_hn_keypair(Rng& rng)
{
  HnKeyPair pair;
  rng.fill(pair.private_key);
  pair.public_key = x25519_public_from_private(pair.private_key);
  return pair;
}

Bytes
X25519Scheme::encrypt(const Key256& public_key, const SuciPlaintextBytes& plaintext, Rng& rng) const
{
  Key256 ephemeral{};
  rng.fill(ephemeral);
  const auto ephemeral_public = x25519_public_from_private(ephemeral);
  const auto shared = x25519_agree(ephemeral, public_key);
  if (!shared) {
    throw ProtocolError(ErrorCode::invalid_argument, "home network public key is not usable");
  }
  const auto keys = x963_kdf(*shared, ephemeral_public);
  const ByteView key_stream(keys);

  const auto body = aes128_ctr(key_stream.subspan(0, 16), key_stream.subspan(16, 16), plaintext);
  const auto tag = hmac_sha256(key_stream.subspan(32, 32), body);

  Bytes out(ephemeral_public.begin(), ephemeral_public.end());
  out.insert(out.end(), body.begin(), body.end());
  out.insert(out.end(), tag.begin(), tag.begin() + 8);
  return out;
}

SuciPlaintextBytes
X25519Scheme::decrypt(const Key256& private_key, ByteView ciphertext) const
{
  if (ciphertext.size() != hybrid_ciphertext_size) {
    throw ProtocolError(ErrorCode::decryption_failure, "hybrid ciphertext has wrong length");
  }
  const auto share = ciphertext.subspan(0, 32);
  const auto body = ciphertext.subspan(32, suci_plaintext_size);
  const auto tag = ciphertext.subspan(32 + suci_plaintext_size, 8);

  const auto shared = x25519_agree(private_key, share);
  if (!shared) {
    throw ProtocolError(ErrorCode::decryption_failure, "malformed KEM share");
  }
  const auto keys = x963_kdf(*shared, share);
  const ByteView key_stream(keys);
  const auto expected = hmac_sha256(key_stream.subspan(32, 32), body);
  if (!constant_time_equal(ByteView(expected).subspan(0, 8), tag)) {
    throw ProtocolError(ErrorCode::decryption_failure, "SUCI integrity tag mismatch");
  }

  const auto plain = aes128_ctr(key_stream.subspan(0, 16), key_stream.subspan(16, 16), body);
  SuciPlaintextBytes out{};
  std::copy(plain.begin(), plain.end(), out.begin());
  return out;
}

Bytes
pke_encrypt(const Key256& public_key, const SuciPlaintextBytes& plaintext, Rng& rng)
{
  return X25519Scheme{}.encrypt(public_key, plaintext, rng);
}

SuciPlaintextBytes
pke_decrypt(const Key256& private_key, ByteView ciphertext)
{
  return X25519Scheme{}.decrypt(private_key, ciphertext);
}

SuiteRegistry
SuiteRegistry::with_defaults(std::uint8_t hnpki)
{
  SuiteRegistry registry;
  registry.add(hnpki, std::make_shared<X25519Scheme>());
  return registry;
}

void
SuiteRegistry::add(std::uint8_t hnpki, std::shared_ptr<const PkeScheme> scheme)
{
  const auto key = std::make_pair(hnpki, static_cast<std::uint8_t>(scheme->id()));
  schemes_[key] = std::move(scheme);
}

const PkeScheme&
SuiteRegistry::find(std::uint8_t hnpki, std::uint8_t supipsi) const
{
  const auto it = schemes_.find({ hnpki, supipsi });
  if (it == schemes_.end()) {
    throw ProtocolError(ErrorCode::unsupported_scheme,
                        "no scheme for HNPKI " + std::to_string(hnpki) + ", SUPIPSI " + std::to_string(supipsi));
  }
  return *it->second;
}

} // namespace pseudoaka::crypto
