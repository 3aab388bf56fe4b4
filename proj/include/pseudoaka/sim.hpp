#pragma once

#include "pseudoaka/hn.hpp"
#include "pseudoaka/reports.hpp"
#include "pseudoaka/scenario.hpp"
#include "pseudoaka/sn.hpp"
#include "pseudoaka/ue.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pseudoaka::sim {

struct UeActor
{
  std::string name;
  std::size_t index = 0;
  hn::SubscriberId subscriber = 0;
  ue::UsimState usim;
  Rng rng{ 0 };
  std::optional<std::string> attached_sn;
  std::optional<std::string> home_lte;
  std::optional<std::string> home_5g;
  std::optional<ActionMix> mix;
  /// Set by fault injection; cleared once the state is consistent again.
  bool faulted = false;
  std::optional<std::size_t> recovery; // index into World::recoveries()
};

struct Violation
{
  std::string check;
  std::string detail;
  std::size_t event_index = 0;
  SimTime t = 0;
  std::string ue;
  Record snapshot;
};

/// What happened to one UE after a corrupt_d2 fault.
struct Recovery
{
  std::string ue;
  SimTime fault_at = 0;
  std::uint32_t corrupted_d2 = 0;
  std::uint32_t hn_newest = 0; // d_f, or d_n when p_f was NULL
  bool desync = false;         // corrupted d2 above every issued counter
  std::size_t lte_akas = 0;    // successful LTE attaches while faulted
  std::size_t lte_updates = 0; // of which delivered a pseudonym
  std::size_t fiveg_akas = 0;  // SUCI-initiated 5G AKAs while faulted
  bool ecf_seen = false;
  bool recovered = false;
  SimTime recovered_at = 0;
};

struct RunCounters
{
  std::size_t attaches = 0;
  std::size_t attach_failures = 0;
  std::size_t lte_akas = 0;
  std::size_t fiveg_akas = 0;
  std::size_t suci_akas = 0;
  std::size_t pages = 0;
  std::size_t page_timeouts = 0;
  std::size_t services = 0;
  std::size_t services_rejected = 0;
  std::size_t batch_fetches = 0;
  std::size_t resumes = 0;
  std::size_t sweeps = 0;
  std::size_t reregistrations = 0;
  std::size_t removed_pseudonyms = 0;
  std::size_t idle = 0;
  std::size_t catcher_inquiries = 0;
  std::size_t malicious_lus = 0;
  std::size_t forged_challenges = 0;
  std::size_t forged_accepted = 0;
  std::size_t rotations_lu = 0;
  std::size_t rotations_5g = 0;
  std::map<std::string, std::size_t> failure_reasons;

  Record to_json() const;
};

struct OccupancySample
{
  SimTime t = 0;
  std::size_t allocated = 0;
  double occupancy = 0;
  double mean_phn = 0;
};

/// Deterministic run id for (scenario, seed): 16 hex digits.
std::string make_run_id(const Scenario& scenario, std::uint64_t seed);

/// Home network, serving networks and UEs of one scenario instance, plus the
/// bookkeeping the invariant checks and reports need. Records go through an
/// internal tap before reaching the sink.
class World
{
public:
  World(const Scenario& scenario, std::uint64_t seed, std::string* trace_out = nullptr);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const Scenario& scenario() const { return scenario_; }
  const std::string& run_id() const { return run_id_; }
  hn::HomeNetwork& hn() { return *hn_; }
  const hn::HomeNetwork& hn() const { return *hn_; }
  sn::ServingNetwork& sn(const std::string& id);
  std::vector<std::unique_ptr<sn::ServingNetwork>>& sns() { return sns_; }
  std::vector<UeActor>& ues() { return ues_; }
  UeActor& ue(std::size_t i) { return ues_.at(i); }

  sn::UeLink link(UeActor& ue);

  /// Runs an attach and does the world-side bookkeeping.
  sn::AttachOutcome attach(UeActor& ue, const std::string& sn_id, sn::Trigger trigger, SimTime now);

  /// Corrupts d2 of a UE; returns the recovery record index.
  std::size_t inject_fault(const FaultSpec& fault, SimTime now);

  /// Runs every invariant; returns the first failure. Also notes recoveries.
  std::optional<Violation> check(SimTime now);

  /// The workload, adversary and fault schedule of the scenario. Stops at
  /// the first violation.
  void execute();

  std::size_t events_processed() const { return events_; }
  SimTime now() const { return now_; }
  const std::optional<Violation>& violation() const { return violation_; }
  const RunCounters& counters() const { return counters_; }
  const std::vector<Recovery>& recoveries() const { return recoveries_; }
  const std::vector<OccupancySample>& occupancy() const { return samples_; }
  LinkabilityReport linkability() { return assessor_.finish(); }

  void emit(SimTime t, std::string_view actor, std::string_view kind, Record fields);

private:
  class Tap : public TraceSink
  {
  public:
    explicit Tap(World& w)
      : world_(w)
    {
    }
    void emit(SimTime t, std::string_view actor, std::string_view kind, Record fields) override;

  private:
    World& world_;
  };

  enum class EventKind
  {
    bootstrap,
    workload,
    adversary,
    fault,
  };

  struct Event
  {
    SimTime t = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::workload;
    std::size_t index = 0;

    bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };

  void on_record(const Record& record);
  std::optional<std::string> choose_sn(UeActor& ue, crypto::Flavor flavor);
  void run_action(UeActor& ue, Action action, SimTime now);
  void run_adversary(const AdversarySpec& adv, Rng& rng, SimTime now);
  void page(SimTime now);
  void sample(SimTime now);
  UeActor* owner_of_guti(const std::string& sn_id, std::uint32_t guti);
  const ActionMix& mix_of(const UeActor& ue) const;

  Scenario scenario_;
  std::uint64_t seed_;
  std::string run_id_;
  std::string* trace_out_;
  Tap tap_{ *this };
  LinkabilityAssessor assessor_;

  std::unique_ptr<hn::HomeNetwork> hn_;
  std::vector<std::unique_ptr<sn::ServingNetwork>> sns_;
  std::vector<UeActor> ues_;
  std::map<std::string, std::size_t> ue_by_name_;
  Rng workload_rng_{ 0 };
  std::vector<Rng> adversary_rngs_;
  ue::UsimState nobody_;
  Rng nobody_rng_{ 0 };

  std::map<std::string, std::deque<std::pair<Block128, Block128>>> captured_;
  std::optional<std::string> tap_problem_;

  std::size_t events_ = 0;
  SimTime now_ = 0;
  std::optional<Violation> violation_;
  RunCounters counters_;
  std::vector<Recovery> recoveries_;
  std::vector<OccupancySample> samples_;
};

struct RunOptions
{
  bool keep_trace = true;
};

struct RunResult
{
  std::string run_id;
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t events = 0;
  SimTime end_time = 0;
  std::optional<Violation> violation;
  std::string trace;
  std::string allocation_log;
  hn::HnStats hn_stats;
  RunCounters counters;
  std::vector<Recovery> recoveries;
  std::vector<OccupancySample> occupancy;
  LinkabilityReport linkability;
  std::size_t max_phn = 0;

  bool ok() const { return !violation; }
  /// Report records in the trace line format.
  std::string report_jsonl() const;
  /// Human-readable digest.
  std::string summary() const;
};

RunResult run(const Scenario& scenario, std::uint64_t seed, const RunOptions& options = {});

/// Independent seeds fanned out over `jobs` threads; results in seed order.
std::vector<RunResult> run_campaign(const Scenario& scenario,
                                    const std::vector<std::uint64_t>& seeds,
                                    unsigned jobs,
                                    const RunOptions& options = {});

struct DrillReport
{
  std::vector<Recovery> ues;
  std::size_t lte_akas_per_ue = 0;
  std::size_t ecf_before_5g = 0; // ECF seen on any LTE vector: should be 0
  bool ok = false;
  std::string detail;

  Record to_json() const;
};

/// For each target: attach over LTE, corrupt d2, run `lte_akas` LTE AKAs
/// (expecting no new pseudonym), then SUCI-initiated 5G AKAs until
/// check_sync passes, at most `max_5g`. The world needs an LTE and a 5G SN.
DrillReport run_resync_drill(World& world,
                             const std::vector<std::size_t>& targets,
                             std::optional<std::uint32_t> value,
                             std::uint32_t offset = 1000,
                             std::size_t lte_akas = 3,
                             std::size_t max_5g = 3);

} // namespace pseudoaka::sim
