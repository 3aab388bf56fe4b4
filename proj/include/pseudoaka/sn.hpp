#pragma once

#include "pseudoaka/hn.hpp"
#include "pseudoaka/ue.hpp"

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pseudoaka::sn {

using crypto::Flavor;

struct SnConfig
{
  std::string id;
  Flavor flavor = Flavor::lte;
  bool li_patched = false;
  bool li_key_binding = false;
  /// AVs fetched per HN request (1..8).
  std::size_t batch_size = 1;
  SimTime guti_lifetime = 86400;
};

/// The UE side of the radio link as the serving network sees it.
struct UeLink
{
  std::string name;
  ue::UsimState* usim = nullptr;
  Rng* rng = nullptr;
};

enum class Trigger
{
  inquiry,  // identity inquiry (LTE) or SUCI registration (5G)
  guti,
  paging,
};

std::string_view to_string(Trigger t);

struct AttachOutcome
{
  bool success = false;
  std::string reason;
  std::optional<std::uint32_t> guti;
  bool lu_sent = false;
  bool rotated = false;
  ue::UpdateKind update = ue::UpdateKind::none;
  std::size_t challenges = 0;
  std::optional<RandPayload> payload;
};

struct GutiEntry
{
  Imsi identity;     // pseudonym (LTE) or SUPI (5G) the AKA ran under
  Imsi cdr_identity; // what CDRs carry
  Key256 session_key{};
  SimTime issued_at = 0; // GUTIs live guti_lifetime from here
  SimTime last_used = 0;
};

struct CdrRecord
{
  Imsi identity;
  std::string service;
  SimTime t_event = 0;
};

struct PageOutcome
{
  bool answered = false;
  std::optional<AttachOutcome> reauth;
};

class ServingNetwork
{
public:
  ServingNetwork(SnConfig config, hn::HomeNetwork& hn, Rng rng, TraceSink* trace = nullptr);

  const SnConfig& config() const { return config_; }
  const std::string& id() const { return config_.id; }

  AttachOutcome attach_lte(const UeLink& ue, SimTime now, Trigger trigger = Trigger::inquiry);
  /// tamper_res_star corrupts the RES* forwarded to the home network.
  AttachOutcome attach_5g(const UeLink& ue, SimTime now, Trigger trigger = Trigger::inquiry, bool tamper_res_star = false);
  AttachOutcome attach(const UeLink& ue, SimTime now, Trigger trigger = Trigger::inquiry);

  /// Prefetches n (1..8) vectors for an identity this SN has attached.
  std::size_t batch_fetch(const Imsi& identity, std::size_t n, SimTime now);

  /// Pages the UE behind a GUTI entry. LTE may page by pseudonym; 5G pages
  /// only by GUTI. When reachable and reauth is set, an AKA follows.
  PageOutcome page(const UeLink& ue, std::uint32_t guti, bool by_identity, bool reachable, bool reauth, SimTime now);

  /// The UE consumes a service under its GUTI context here; records a CDR.
  bool service(const UeLink& ue, const std::string& tag, SimTime now);

  void expire_gutis(SimTime now);

  const std::map<std::uint32_t, GutiEntry>& guti_table() const { return gutis_; }
  const std::vector<CdrRecord>& cdrs() const { return cdrs_; }
  std::size_t cached_avs(const Imsi& identity) const;
  /// MSINs delivered to the LI function.
  const std::vector<std::uint64_t>& li_log() const { return li_log_; }

private:
  struct Fetch
  {
    std::optional<aka::AuthVector> av;
    std::string error;
  };

  aka::AvRequestContext request_context() const;
  Fetch next_lte_av(const Imsi& identity, SimTime now);
  void flush_cache(const Imsi& identity);
  std::optional<Imsi> resolve_guti(std::uint32_t guti, SimTime now);
  std::uint32_t issue_guti(const ue::UsimState& usim, GutiEntry entry);
  void fail(const UeLink& ue, AttachOutcome& out, std::string reason, SimTime now);
  void note_av(const aka::AuthVector& av, SimTime now);
  void emit(SimTime t, std::string_view kind, Record fields);
  void emit_ue(const UeLink& ue, SimTime t, std::string_view kind, Record fields);

  SnConfig config_;
  hn::HomeNetwork& hn_;
  Rng rng_;
  TraceSink* trace_;

  std::map<std::uint32_t, GutiEntry> gutis_;
  std::map<Imsi, std::uint32_t> by_identity_;
  std::map<Imsi, std::deque<aka::AuthVector>> av_cache_;
  std::vector<CdrRecord> cdrs_;
  std::vector<std::uint64_t> li_log_;
};

inline constexpr std::size_t max_batch = 8;

} // namespace pseudoaka::sn
