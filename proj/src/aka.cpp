#include "pseudoaka/aka.hpp"
#include "pseudoaka/error.hpp"

namespace pseudoaka::aka {

Block128
assemble_autn(std::uint64_t sqn, const crypto::Ak48& ak, std::uint16_t amf, const crypto::Mac64& mac_a)
{
  Block128 autn{};
  for (std::size_t i = 0; i < 6; i++) {
    autn[i] = static_cast<std::uint8_t>((sqn >> (8 * (5 - i))) ^ ak[i]);
  }
  autn[6] = static_cast<std::uint8_t>(amf >> 8);
  autn[7] = static_cast<std::uint8_t>(amf);
  std::copy(mac_a.begin(), mac_a.end(), autn.begin() + 8);
  return autn;
}

BuiltAv
build_av(const crypto::MasterKey& k,
         std::uint64_t subscriber_msin,
         SqnState& hn_sqn,
         const Block128& rand,
         Flavor flavor,
         const AvRequestContext& request)
{
  if (hn_sqn.value >= sqn_max) {
    throw ProtocolError(ErrorCode::counter_overflow, "SQN space exhausted");
  }
  const std::uint64_t sqn = ++hn_sqn.value;
  const auto f = crypto::aka_functions(k, rand, sqn, crypto::default_amf);

  BuiltAv out;
  out.av.flavor = flavor;
  out.av.rand = rand;
  out.av.autn = assemble_autn(sqn, f.ak, crypto::default_amf, f.mac_a);

  std::optional<std::uint64_t> binding;
  if (flavor == Flavor::lte && request.li_key_binding) {
    binding = subscriber_msin;
  }
  out.av.anchor_key = crypto::derive_session_keys(f.ck_ik, request.serving_network, flavor, binding);

  if (flavor == Flavor::lte) {
    out.av.xres = f.xres;
  } else {
    const auto xres_star = crypto::derive_res_star(f.ck_ik, request.serving_network, rand, f.xres);
    out.av.hxres_star = crypto::hres_star(rand, xres_star);
    out.xres_star = xres_star;
  }
  if (request.li_patched) {
    out.av.msin = subscriber_msin;
  }
  return out;
}

std::string_view
to_string(ChallengeVerdict v)
{
  switch (v) {
    case ChallengeVerdict::accepted:
      return "accepted";
    case ChallengeVerdict::mac_failure:
      return "mac-failure";
    case ChallengeVerdict::sqn_replay:
      return "sqn-replay";
  }
  return "?";
}

ChallengeResult
verify_challenge(const crypto::MasterKey& k, SqnState& usim_sqn, const Block128& rand, const Block128& autn)
{
  ChallengeResult result;
  // f5 depends on RAND alone, so any SQN works for unmasking.
  const auto unmask = crypto::aka_functions(k, rand, 0, 0);
  std::uint64_t sqn = 0;
  for (std::size_t i = 0; i < 6; i++) {
    sqn = (sqn << 8) | static_cast<std::uint8_t>(autn[i] ^ unmask.ak[i]);
  }
  const auto amf = static_cast<std::uint16_t>((autn[6] << 8) | autn[7]);
  const auto f = crypto::aka_functions(k, rand, sqn, amf);

  result.sqn = sqn;
  if (!constant_time_equal(f.mac_a, ByteView(autn).subspan(8, 8))) {
    result.verdict = ChallengeVerdict::mac_failure;
    return result;
  }
  if (sqn <= usim_sqn.value) {
    result.verdict = ChallengeVerdict::sqn_replay;
    return result;
  }
  usim_sqn.value = sqn;
  result.verdict = ChallengeVerdict::accepted;
  result.res = f.xres;
  result.ck_ik = f.ck_ik;
  return result;
}

bool
sn_check_response_lte(const AuthVector& av, const crypto::Mac64& res)
{
  return av.xres && constant_time_equal(*av.xres, res);
}

bool
sn_check_response_5g(const AuthVector& av, const crypto::ResStar& res_star)
{
  return av.hxres_star && constant_time_equal(*av.hxres_star, crypto::hres_star(av.rand, res_star));
}

bool
hn_check_response_5g(const crypto::ResStar& xres_star, const crypto::ResStar& res_star)
{
  return constant_time_equal(xres_star, res_star);
}

nlohmann::ordered_json
to_json(const AuthVector& av)
{
  nlohmann::ordered_json j;
  j["flavor"] = std::string(crypto::to_string(av.flavor));
  j["rand"] = to_hex(av.rand);
  j["autn"] = to_hex(av.autn);
  if (av.xres) {
    j["xres"] = to_hex(*av.xres);
  }
  if (av.hxres_star) {
    j["hxres_star"] = to_hex(*av.hxres_star);
  }
  j[av.flavor == Flavor::lte ? "k_asme" : "k_seaf"] = to_hex(av.anchor_key);
  if (av.msin) {
    j["msin"] = format_msin(*av.msin);
  }
  return j;
}

} // namespace pseudoaka::aka
