#include "pseudoaka/vectors.hpp"
#include "pseudoaka/aka.hpp"
#include "pseudoaka/codec.hpp"
#include "pseudoaka/crypto.hpp"

#include <sstream>

namespace pseudoaka::vectors {

namespace {

std::string
hex(ByteView b)
{
  return to_hex(b);
}

std::string
salt_hex(u128 salt)
{
  // 68 bits as 17 hex digits.
  std::string out(17, '0');
  for (int i = 16; i >= 0; i--) {
    out[static_cast<std::size_t>(i)] = "0123456789abcdef"[static_cast<unsigned>(salt & 0xf)];
    salt >>= 4;
  }
  return out;
}

Key128
counting_key(std::uint8_t start)
{
  Key128 k{};
  for (std::size_t i = 0; i < k.size(); i++) {
    k[i] = static_cast<std::uint8_t>(start + i);
  }
  return k;
}

class Writer
{
public:
  explicit Writer(std::string_view title) { out_ << "# " << title << "\n"; }

  Writer& comment(std::string_view c)
  {
    out_ << "# " << c << "\n";
    return *this;
  }
  Writer& begin()
  {
    out_ << "\n";
    return *this;
  }
  Writer& kv(std::string_view key, const std::string& value)
  {
    out_ << key << " = " << value << "\n";
    return *this;
  }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
};

std::string
rand_payload_file()
{
  Writer w("RAND payload: p (34 bits) | d (24) | ECF (2) | salt (68), MSB first");
  w.comment("salt is 17 hex digits (68 bits); block is the 16-byte encoding");
  const RandPayload cases[] = {
    { 0, 0, 0, 0 },
    { 1, 1, 0, 1 },
    { 1234567890, 42, 1, (u128{ 0x0123456789abcdefULL } << 4) | 0xf },
    { msin_space - 1, counter_max, 3, salt_mask },
    { 17179869183ULL, 0, 0, 0 }, // 2^34 - 1: fits the field, not an MSIN
  };
  for (const auto& p : cases) {
    w.begin()
      .kv("p", std::to_string(p.pseudonym))
      .kv("d", std::to_string(p.counter))
      .kv("ecf", std::to_string(p.ecf))
      .kv("salt", salt_hex(p.salt))
      .kv("block", hex(encode_rand_payload(p)));
  }
  return w.str();
}

std::string
rand_encryption_file()
{
  Writer w("RAND = AES-128-ECB(kappa, payload block), kappa = KDF(K, \"pseudonym-key\")");
  const std::pair<Key128, RandPayload> cases[] = {
    { counting_key(0x00), { 1234567890, 3, 0, 0x5a5a5a5a5a5a5a5aULL } },
    { counting_key(0x10), { 42, 7, 1, 0 } },
    { counting_key(0xf0), { 9999999999ULL, counter_max, 0, salt_mask } },
  };
  for (const auto& [kbytes, payload] : cases) {
    crypto::MasterKey k{ kbytes };
    const auto kappa = crypto::derive_pseudonym_key(k);
    const auto block = encode_rand_payload(payload);
    w.begin()
      .kv("k", hex(k.bytes))
      .kv("kappa", hex(kappa.bytes))
      .kv("payload", hex(block))
      .kv("rand", hex(crypto::encrypt_rand(kappa, block)));
  }
  return w.str();
}

std::string
suci_mac_file()
{
  Writer w("SUCI plaintext: MSIN (5 BCD bytes) | delta_min (3) | delta_max (3) | T (8)");
  w.comment("T = 64-bit MAC under K over the first 11 plaintext bytes");
  struct C
  {
    std::uint8_t key_start;
    std::uint64_t msin;
    std::uint32_t dmin;
    std::uint32_t dmax;
  };
  const C cases[] = {
    { 0x00, 123456789, 1, 2 },
    { 0x20, 9876543210ULL, 17, 30 },
    { 0x40, 5, 0, counter_max },
  };
  for (const auto& c : cases) {
    crypto::MasterKey k{ counting_key(c.key_start) };
    const auto input = suci_mac_input(c.msin, c.dmin, c.dmax);
    SuciPlaintext pt{ c.msin, c.dmin, c.dmax, crypto::mac(k, input) };
    Bytes tag;
    put_uint(tag, pt.tag, 8);
    w.begin()
      .kv("k", hex(k.bytes))
      .kv("msin", format_msin(c.msin))
      .kv("delta_min", std::to_string(c.dmin))
      .kv("delta_max", std::to_string(c.dmax))
      .kv("mac_input", hex(input))
      .kv("tag", hex(tag))
      .kv("plaintext", hex(encode_suci_plaintext(pt)));
  }
  return w.str();
}

std::string
suci_null_file()
{
  Writer w("Null-scheme SUCI: BCD MCC/MNC (F pads a 2-digit MNC) | HNPKI | SUPIPSI=0 | MSIN as 5 BCD bytes");
  const std::pair<NetworkId, std::uint64_t> cases[] = {
    { { "001", "01" }, 123456789 },
    { { "262", "01" }, 9876543210ULL },
    { { "310", "410" }, 1 },
  };
  for (const auto& [net, msin] : cases) {
    w.begin()
      .kv("mcc", net.mcc)
      .kv("mnc", net.mnc)
      .kv("msin", format_msin(msin))
      .kv("suci", hex(encode_suci(make_null_scheme_suci(net, msin))));
  }
  return w.str();
}

std::string
suci_x25519_file()
{
  Writer w("X25519 hybrid SUCI: header | ephemeral public key (32) | ciphertext (19) | tag (8)");
  w.comment("ephemeral is the private key the sender drew; rng_seed reproduces it in this library");
  const std::uint64_t seeds[] = { 1, 2 };
  for (const auto seed : seeds) {
    Rng keygen(1000 + seed);
    const auto keys = crypto::generate_hn_keypair(keygen);
    crypto::MasterKey k{ counting_key(static_cast<std::uint8_t>(0x30 * seed)) };
    SuciPlaintext pt;
    pt.msin = 1234500000ULL + seed;
    pt.delta_min = static_cast<std::uint32_t>(seed);
    pt.delta_max = static_cast<std::uint32_t>(seed + 5);
    pt.tag = crypto::mac(k, suci_mac_input(pt.msin, pt.delta_min, pt.delta_max));
    const auto plain = encode_suci_plaintext(pt);

    Rng peek(seed);
    Key256 ephemeral{};
    peek.fill(ephemeral);
    Rng rng(seed);
    Suci suci;
    suci.hnid = { "001", "01" };
    suci.hnpki = 1;
    suci.supipsi = static_cast<std::uint8_t>(ProtectionScheme::hybrid_x25519);
    suci.ciphertext = crypto::pke_encrypt(keys.public_key, plain, rng);
    w.begin()
      .kv("hn_private", hex(keys.private_key))
      .kv("hn_public", hex(keys.public_key))
      .kv("rng_seed", std::to_string(seed))
      .kv("ephemeral", hex(ephemeral))
      .kv("plaintext", hex(plain))
      .kv("suci", hex(encode_suci(suci)));
  }
  return w.str();
}

std::string
aka_file()
{
  Writer w("AKA functions: f1 (MAC-A), f2 (XRES), f3/f4 (CK||IK), f5 (AK); AUTN = SQN^AK | AMF | MAC-A");
  struct C
  {
    std::uint8_t key_start;
    std::uint8_t rand_start;
    std::uint64_t sqn;
  };
  const C cases[] = { { 0x00, 0x80, 1 }, { 0x55, 0x11, 0x0000deadbeefULL }, { 0xa0, 0x00, aka::sqn_max } };
  for (const auto& c : cases) {
    crypto::MasterKey k{ counting_key(c.key_start) };
    const auto rand = counting_key(c.rand_start);
    const auto out = crypto::aka_functions(k, rand, c.sqn, crypto::default_amf);
    Bytes sqn;
    put_uint(sqn, c.sqn, 6);
    w.begin()
      .kv("k", hex(k.bytes))
      .kv("rand", hex(rand))
      .kv("sqn", hex(sqn))
      .kv("amf", "8000")
      .kv("mac_a", hex(out.mac_a))
      .kv("xres", hex(out.xres))
      .kv("ck_ik", hex(out.ck_ik))
      .kv("ak", hex(out.ak))
      .kv("autn", hex(aka::assemble_autn(c.sqn, out.ak, crypto::default_amf, out.mac_a)));
  }
  return w.str();
}

} // namespace

std::map<std::string, std::string>
generate()
{
  return {
    { "rand-payload.hex", rand_payload_file() }, { "rand-encryption.hex", rand_encryption_file() },
    { "suci-mac.hex", suci_mac_file() },         { "suci-null.hex", suci_null_file() },
    { "suci-x25519.hex", suci_x25519_file() },   { "aka.hex", aka_file() },
  };
}

std::vector<Case>
parse(const std::string& text)
{
  std::vector<Case> out;
  Case current;
  std::istringstream in(text);
  std::string line;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      continue;
    }
    current[line.substr(0, eq)] = line.substr(eq + 3);
  }
  flush();
  return out;
}

} // namespace pseudoaka::vectors
