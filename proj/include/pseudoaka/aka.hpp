#pragma once

#include "pseudoaka/crypto.hpp"

#include <json.hpp>

#include <optional>
#include <string>

// Shared AKA mechanics for both the LTE and the 5G flows: vector assembly,
// AUTN verification with SQN freshness, and response comparison.

namespace pseudoaka::aka {

using crypto::Flavor;

inline constexpr std::uint64_t sqn_max = (std::uint64_t{ 1 } << 48) - 1;

/// HN side: last SQN issued. UE side: last SQN accepted.
struct SqnState
{
  std::uint64_t value = 0;
};

struct AuthVector
{
  Flavor flavor = Flavor::lte;
  Block128 rand{};
  Block128 autn{};
  std::optional<crypto::Mac64> xres;        // LTE only
  std::optional<Block128> hxres_star;       // 5G only
  Key256 anchor_key{};                      // K_ASME or K_SEAF
  std::optional<std::uint64_t> msin;        // only toward LI-patched SNs
};

struct AvRequestContext
{
  std::string serving_network;
  bool li_patched = false;
  bool li_key_binding = false;
};

struct BuiltAv
{
  AuthVector av;
  /// 5G: XRES* stays in the home network for the final comparison.
  std::optional<crypto::ResStar> xres_star;
};

/// Advances hn_sqn and assembles the vector around an already-constructed RAND.
BuiltAv build_av(const crypto::MasterKey& k,
                 std::uint64_t subscriber_msin,
                 SqnState& hn_sqn,
                 const Block128& rand,
                 Flavor flavor,
                 const AvRequestContext& request);

Block128 assemble_autn(std::uint64_t sqn, const crypto::Ak48& ak, std::uint16_t amf, const crypto::Mac64& mac_a);

enum class ChallengeVerdict
{
  accepted,
  mac_failure,
  sqn_replay,
};

std::string_view to_string(ChallengeVerdict v);

struct ChallengeResult
{
  ChallengeVerdict verdict = ChallengeVerdict::mac_failure;
  crypto::Mac64 res{};
  Key256 ck_ik{};
  std::uint64_t sqn = 0;

  bool accepted() const { return verdict == ChallengeVerdict::accepted; }
};

/// USIM check of (RAND, AUTN). On acceptance usim_sqn advances to the
/// recovered SQN; on rejection it is untouched.
ChallengeResult verify_challenge(const crypto::MasterKey& k, SqnState& usim_sqn, const Block128& rand, const Block128& autn);

bool sn_check_response_lte(const AuthVector& av, const crypto::Mac64& res);
bool sn_check_response_5g(const AuthVector& av, const crypto::ResStar& res_star);
bool hn_check_response_5g(const crypto::ResStar& xres_star, const crypto::ResStar& res_star);

/// One trace record with hex fields.
nlohmann::ordered_json to_json(const AuthVector& av);

} // namespace pseudoaka::aka
