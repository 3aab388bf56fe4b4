#pragma once

#include "pseudoaka/aka.hpp"
#include "pseudoaka/codec.hpp"
#include "pseudoaka/crypto.hpp"
#include "pseudoaka/random.hpp"
#include "pseudoaka/trace.hpp"

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pseudoaka::hn {

using SubscriberId = std::uint32_t;

/// The MSIN range [0, 10^digits) from which pseudonyms are drawn, with the
/// owner of every value currently in use (IMSIs inside the range included).
class PseudonymPool
{
public:
  explicit PseudonymPool(unsigned digits);

  unsigned digits() const { return digits_; }
  std::uint64_t space() const { return space_; }
  bool in_space(std::uint64_t value) const { return value < space_; }

  std::optional<SubscriberId> owner(std::uint64_t value) const;
  std::size_t allocated_count() const { return owners_.size(); }
  std::size_t free_count() const { return static_cast<std::size_t>(space_ - owners_.size()); }
  double occupancy() const { return static_cast<double>(owners_.size()) / static_cast<double>(space_); }

  /// Marks a specific value as used; throws invalid_argument if it is taken.
  void reserve(std::uint64_t value, SubscriberId owner);

  struct Allocation
  {
    std::uint64_t value = 0;
    std::uint32_t tries = 0;
  };

  /// Rejection sampling over the raw range. Throws pool_exhausted when no
  /// value is free.
  Allocation allocate(SubscriberId owner, Rng& rng);

  void release(std::uint64_t value);

private:
  unsigned digits_;
  std::uint64_t space_;
  std::unordered_map<std::uint64_t, SubscriberId> owners_;
};

/// Home network view of one subscriber.
struct SubscriberRecord
{
  SubscriberId id = 0;
  Imsi imsi;
  crypto::MasterKey k;
  crypto::PseudonymKey kappa;
  PseudonymEntry current;               // (p_c, d_c)
  PseudonymEntry next;                  // (p_n, d_n)
  std::optional<PseudonymEntry> future; // (p_f, d_f) or NULL
  std::vector<PseudonymEntry> retired;  // P_HN, ascending counter
  std::uint32_t ctr = 0;
  aka::SqnState sqn;

  /// Slots followed by P_HN.
  std::vector<PseudonymEntry> live_entries() const;
  bool holds_pseudonym(std::uint64_t value) const;
  std::optional<PseudonymEntry> find_pseudonym(std::uint64_t value) const;
};

struct RandConstruction
{
  Block128 rand{};
  RandPayload payload;
  std::optional<PseudonymPool::Allocation> allocation;
  bool cap_reached = false;
};

/// Construct RAND for LTE AKA. Allocates p_f when it is NULL and P_HN is
/// below the cap; at the cap embeds (p_n, d_n) instead.
RandConstruction construct_rand_lte(SubscriberRecord& sub, PseudonymPool& pool, std::size_t cap, Rng& rng);

/// Update pseudonyms after a location update for q. Returns the entry moved
/// into P_HN when a rotation happened.
std::optional<PseudonymEntry> handle_lu(SubscriberRecord& sub, std::uint64_t q);

/// Construct RAND for 5G AKA from an opened SUCI plaintext. Throws
/// mac_failure (leaving the record untouched) when T does not verify.
RandConstruction construct_rand_5g(SubscriberRecord& sub,
                                   const SuciPlaintext& opened,
                                   PseudonymPool& pool,
                                   std::size_t cap,
                                   Rng& rng);

/// Checks T over (MSIN, delta_min, delta_max) under the subscriber's K.
bool verify_suci_tag(const SubscriberRecord& sub, const SuciPlaintext& opened);

/// Removes every P_HN entry with counter < delta_min and frees its value.
std::vector<PseudonymEntry> prune_phn(SubscriberRecord& sub, std::uint32_t delta_min, PseudonymPool& pool);

/// Update pseudonyms after a confirmed 5G AKA: rotates only for a
/// SUCI-initiated run whose embedded pseudonym is still p_f.
std::optional<PseudonymEntry> confirm_5g_success(SubscriberRecord& sub,
                                                 const PseudonymEntry& embedded,
                                                 bool suci_initiated);

// --- allocation log and CDR resolution -------------------------------------

struct AllocationLogEntry
{
  std::uint64_t pseudonym = 0;
  Imsi imsi;
  SimTime t_alloc = 0;
  std::optional<SimTime> t_first_aka;
  std::optional<SimTime> t_released;
  std::vector<std::string> sns_used;
};

struct Cdr
{
  Imsi identity;
  std::string sn_id;
  std::string service;
  SimTime t_event = 0;
};

class AllocationLog
{
public:
  void open(std::uint64_t pseudonym, const Imsi& imsi, SimTime t);
  void note_sn(std::uint64_t pseudonym, const std::string& sn_id);
  void note_first_aka(std::uint64_t pseudonym, SimTime t);
  void release(std::uint64_t pseudonym, SimTime t);
  void add_subscriber(const Imsi& imsi) { subscribers_.insert(imsi); }

  const std::vector<AllocationLogEntry>& entries() const { return entries_; }
  const std::set<Imsi>& subscribers() const { return subscribers_; }

  /// Maps a CDR identity to the subscriber that generated it.
  ///
  /// Raw IMSIs resolve to themselves. For a pseudonym the candidates are
  /// tried in order: holders that used the CDR's SN and held the value at
  /// t_event; holders that used the SN and released the value less than
  /// `grace` before t_event (a GUTI outliving its pseudonym); any holder at
  /// t_event. Latest allocation wins within a tier. Throws unresolvable_cdr.
  Imsi resolve(const Cdr& cdr, SimTime grace) const;

  /// Resolution by allocation interval only, ignoring which SN was used.
  std::optional<Imsi> resolve_by_interval(const Cdr& cdr) const;

  /// One header record then one record per entry.
  std::string to_jsonl(const std::string& run_id) const;
  static AllocationLog from_jsonl(std::string_view text, std::string* run_id = nullptr);

private:
  AllocationLogEntry* live_entry(std::uint64_t pseudonym);

  std::vector<AllocationLogEntry> entries_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_value_;
  std::set<Imsi> subscribers_;
};

// --- the home network actor -------------------------------------------------

struct HnConfig
{
  NetworkId network{ "001", "01" };
  unsigned pool_digits = 4;
  std::size_t cap = 10;
  std::uint8_t hnpki = 1;
  SimTime cdr_grace = 86400;
};

struct AvRequest
{
  Imsi identity;
  aka::AvRequestContext context;
  std::size_t count = 1;
};

struct FiveGAv
{
  aka::AuthVector av;
  std::uint64_t context_id = 0;
};

struct HnStats
{
  std::uint64_t av_requests = 0;
  std::uint64_t rejected_requests = 0;
  std::uint64_t rand_encryptions = 0;
  std::uint64_t suci_decryptions = 0;
  std::uint64_t suci_mac_checks = 0;
  std::uint64_t allocations = 0;
  std::uint64_t allocation_tries = 0;
  std::uint64_t rotations = 0;
  std::uint64_t pruned = 0;
  std::uint64_t ecf_set = 0;
  std::uint64_t cap_hits = 0;
  std::uint64_t lu_received = 0;
  std::uint64_t lu_ignored = 0;
};

/// What a USIM gets at provisioning time.
struct Provisioned
{
  Imsi imsi;
  crypto::MasterKey k;
  PseudonymEntry p1;
  PseudonymEntry p2;
};

/// Subscriber provisioning file: network, pool and cap settings, the HN key
/// pair and every subscriber's IMSI, K and initial pseudonyms.
struct ProvisioningFile
{
  NetworkId network{ "001", "01" };
  unsigned pool_digits = 4;
  std::size_t cap = 10;
  std::uint8_t hnpki = 1;
  std::optional<crypto::HnKeyPair> keys;
  std::vector<Provisioned> subscribers;
};

std::string to_json_text(const ProvisioningFile& file);
/// Throws config_error on malformed input.
ProvisioningFile parse_provisioning(std::string_view text);

class HomeNetwork
{
public:
  HomeNetwork(HnConfig config, crypto::HnKeyPair keys, Rng rng, TraceSink* trace = nullptr);

  const HnConfig& config() const { return config_; }
  const Key256& public_key() const { return keys_.public_key; }

  /// Adds a subscriber. Initial pseudonyms are drawn from the pool unless
  /// given, with counters 1 and 2.
  Provisioned provision(const Imsi& imsi,
                        const crypto::MasterKey& k,
                        std::optional<std::pair<std::uint64_t, std::uint64_t>> initial = std::nullopt,
                        SimTime now = 0);

  /// Subscriber owning q as IMSI or as a live pseudonym; throws
  /// unknown_subscriber.
  SubscriberId lookup_identity(const Imsi& q) const;
  std::optional<SubscriberId> find_by_imsi(const Imsi& imsi) const;

  std::vector<aka::AuthVector> request_av_lte(const AvRequest& request, SimTime now);
  /// Returns true when the location update rotated the subscriber's pseudonyms.
  bool location_update(const Imsi& q, const std::string& sn_id, SimTime now);

  FiveGAv request_av_5g_suci(ByteView suci_bytes, const aka::AvRequestContext& context, SimTime now);
  FiveGAv request_av_5g_imsi(const Imsi& imsi, const aka::AvRequestContext& context, SimTime now);
  /// Compares RES* with the stored XRES*; on a match applies the 5G update
  /// rule. Returns the comparison result.
  bool confirm_5g(std::uint64_t context_id, const crypto::ResStar& res_star, SimTime now);

  Imsi resolve_cdr(const Cdr& cdr) const { return log_.resolve(cdr, config_.cdr_grace); }

  std::span<const SubscriberRecord> subscribers() const { return subscribers_; }
  const SubscriberRecord& subscriber(SubscriberId id) const { return subscribers_.at(id); }
  const PseudonymPool& pool() const { return pool_; }
  const AllocationLog& log() const { return log_; }
  const HnStats& stats() const { return stats_; }
  std::size_t pending_5g_contexts() const { return pending_.size(); }

  /// Test-only access for fault injection and checker sanity tests.
  SubscriberRecord& mutable_subscriber(SubscriberId id) { return subscribers_.at(id); }
  PseudonymPool& mutable_pool() { return pool_; }

private:
  struct Pending5g
  {
    SubscriberId subscriber = 0;
    crypto::ResStar xres_star{};
    PseudonymEntry embedded;
    bool suci_initiated = false;
    std::string sn_id;
  };

  RandConstruction construct_lte_logged(SubscriberRecord& sub, SimTime now);
  void record_allocation(const SubscriberRecord& sub, const RandConstruction& rc, SimTime now);
  void record_rotation(const SubscriberRecord& sub, const PseudonymEntry& retired, std::string_view cause, SimTime now);
  FiveGAv finish_5g(SubscriberRecord& sub,
                    const RandConstruction& rc,
                    const aka::AvRequestContext& context,
                    bool suci_initiated,
                    SimTime now);
  void reject(std::string_view why, const std::string& detail, SimTime now);
  void emit(SimTime t, std::string_view kind, Record fields);

  HnConfig config_;
  crypto::HnKeyPair keys_;
  crypto::SuiteRegistry registry_;
  Rng rng_;
  TraceSink* trace_;

  std::vector<SubscriberRecord> subscribers_;
  std::unordered_map<std::uint64_t, SubscriberId> imsi_index_;
  PseudonymPool pool_;
  AllocationLog log_;
  std::map<std::uint64_t, Pending5g> pending_;
  std::uint64_t next_context_ = 1;
  HnStats stats_;
};

inline constexpr std::size_t max_pending_5g = 4096;

} // namespace pseudoaka::hn
