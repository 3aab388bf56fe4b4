#pragma once

#include "pseudoaka/aka.hpp"
#include "pseudoaka/codec.hpp"
#include "pseudoaka/crypto.hpp"
#include "pseudoaka/random.hpp"
#include "pseudoaka/trace.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pseudoaka::ue {

struct RemovalPolicy
{
  SimTime max_age = 86400;
  std::size_t max_size = 10;
};

/// Security context left behind by a successful attach at one SN.
struct GutiContext
{
  std::uint32_t guti = 0;
  crypto::Flavor flavor = crypto::Flavor::lte;
  /// Pseudonym the attach ran under; empty for SUPI-based 5G attaches.
  std::optional<std::uint64_t> pseudonym;
  Key256 session_key{};
  SimTime last_used = 0;
};

/// An entry of P_UE and the time it left the slots.
struct OldPseudonym
{
  PseudonymEntry entry;
  SimTime retired_at = 0;
};

struct UsimState
{
  Imsi imsi;
  crypto::MasterKey k;
  crypto::PseudonymKey kappa;
  std::optional<Key256> hn_public_key;
  std::uint8_t hnpki = 1;
  PseudonymEntry slot1; // (p1, d1)
  PseudonymEntry slot2; // (p2, d2)
  std::vector<OldPseudonym> p_ue; // ascending counter
  aka::SqnState sqn;
  std::map<std::string, GutiContext> guti_contexts;
  RemovalPolicy policy;

  /// Pseudonym values sent to each SN since the last completed attach there.
  std::map<std::string, std::set<std::uint64_t>> exposed;

  /// Binds the MSIN into LTE session keys.
  bool li_key_binding = false;
  /// Misbehaviour: keep using a GUTI after its pseudonym was dropped.
  bool retain_stale_guti = false;

  std::uint32_t delta_min() const;
  std::uint32_t delta_max() const { return slot2.counter; }
  bool holds(std::uint64_t value) const;
};

/// Fresh USIM as provisioned: slots (p1, 1), (p2, 2), empty P_UE.
UsimState provision_usim(const Imsi& imsi,
                         const crypto::MasterKey& k,
                         const PseudonymEntry& p1,
                         const PseudonymEntry& p2,
                         std::optional<Key256> hn_public_key,
                         std::uint8_t hnpki = 1);

/// Answer to an LTE identity inquiry: p2 unless p2 was already sent to this
/// SN without the attach completing and p1 was not, then p1. Never the IMSI.
Imsi respond_identity_lte(UsimState& usim, const std::string& sn_id);

/// SUCI for a 5G registration; null scheme when no HN key is provisioned.
Suci respond_identity_5g(const UsimState& usim, Rng& rng);

enum class UpdateKind
{
  none,
  shifted,
  reset,
};

std::string_view to_string(UpdateKind kind);

/// Applies an AUTN-verified RAND payload. Throws unrenderable_pseudonym,
/// leaving the state untouched, when p cannot be an MSIN.
UpdateKind update_pseudonyms_ue(UsimState& usim, const RandPayload& payload, SimTime now = 0);

struct ChallengeAnswer
{
  aka::ChallengeVerdict verdict = aka::ChallengeVerdict::mac_failure;
  crypto::Mac64 res{};
  crypto::ResStar res_star{};
  Key256 session_key{};
  UpdateKind update = UpdateKind::none;
  std::optional<RandPayload> payload;
  bool corrupt_payload = false;

  bool accepted() const { return verdict == aka::ChallengeVerdict::accepted; }
};

/// Full UE side of one AKA run: AUTN check, then pseudonym extraction and
/// update, then the response and session key for the given SN.
ChallengeAnswer answer_challenge(UsimState& usim,
                                 const std::string& sn_id,
                                 crypto::Flavor flavor,
                                 const Block128& rand,
                                 const Block128& autn,
                                 SimTime now);

/// Records a completed attach at sn_id.
void complete_attach(UsimState& usim, const std::string& sn_id, GutiContext context);

/// Drops P_UE entries idle for longer than max_age that have no context at
/// the attached SN, then evicts the oldest while P_UE exceeds max_size.
/// GUTI contexts of dropped pseudonyms go too unless retain_stale_guti.
std::vector<PseudonymEntry> apply_removal_policy(UsimState& usim,
                                                 SimTime now,
                                                 const std::optional<std::string>& attached_sn);

struct RegistrationIntent
{
  std::string sn_id;
  std::uint64_t stale_pseudonym = 0;
};

/// When the only context at the attached SN runs under a P_UE pseudonym,
/// asks for a fresh registration there with p1/p2.
std::optional<RegistrationIntent> reregister_before_drop(const UsimState& usim, const std::string& attached_sn);

Record to_json(const UsimState& usim);

} // namespace pseudoaka::ue
