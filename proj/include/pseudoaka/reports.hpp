#pragma once

#include "pseudoaka/hn.hpp"
#include "pseudoaka/trace.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Post-run analyses. Everything here is computed from a trace (and, for
// billing, the exported allocation log), never from live simulator state.

namespace pseudoaka::sim {

struct LinkabilityReport
{
  // Passive eavesdropper: cleartext identities on the air interface.
  std::size_t observations = 0;
  std::size_t sessions = 0; // distinct (UE, pseudonym) pairs observed
  std::size_t pages_by_pseudonym = 0;
  std::size_t guti_exposures = 0;

  // Active LTE catcher.
  std::size_t lte_inquiries = 0;
  std::size_t lte_harvested = 0; // distinct (UE, pseudonym) pairs
  std::size_t lte_windows = 0;   // non-empty harvests between two UE updates
  std::size_t lte_max_window = 0;
  std::size_t lte_window_violations = 0; // windows holding more than 2 values
  std::size_t lte_consecutive_overlaps = 0;

  // Active 5G catcher.
  std::size_t suci_harvested = 0;
  std::size_t suci_duplicates = 0;
  std::size_t null_scheme_sucis = 0;

  // Checked for every UE whether or not an adversary is present.
  std::size_t out_of_slot = 0;    // pseudonym sent while not in the UE's slots
  std::size_t noncontiguous = 0;  // pseudonym sent again after leaving the slots
  std::size_t cleartext_msin = 0; // identity response carrying the true MSIN
  std::size_t fiveg_long_term_pages = 0;

  bool ok() const;
  Record to_json() const;
};

/// Streaming form of assess_linkability, fed one trace record at a time.
class LinkabilityAssessor
{
public:
  void observe(const Record& record);
  /// Closes open harvest windows on a copy, so observing can continue.
  LinkabilityReport finish() const;

private:
  struct UeView
  {
    std::string msin;
    std::uint64_t p1 = 0;
    std::uint64_t p2 = 0;
    std::set<std::uint64_t> seen;      // observed while in the slots
    std::set<std::uint64_t> left;      // observed, then dropped from the slots
    std::set<std::uint64_t> window;    // catcher harvest since the last update
    std::set<std::uint64_t> previous;  // the window before that
    std::set<std::uint64_t> harvested; // everything the catcher got
  };

  LinkabilityReport close_all();
  void close_window(UeView& ue);
  void on_identity(const std::string& ue_name, UeView& ue, const Record& record);

  LinkabilityReport report_;
  std::map<std::string, UeView> ues_;
  std::set<std::string> lte_catchers_;
  std::set<std::string> fiveg_catchers_;
  std::set<std::string> fiveg_sns_;
  bool passive_ = false;
  std::set<std::string> sucis_;
};

LinkabilityReport assess_linkability(std::string_view trace_jsonl);

struct Misattribution
{
  SimTime t = 0;
  std::string sn;
  std::string identity;
  std::string naive;     // interval-only answer, empty when none
  std::string corrected; // staged resolution
  std::string consumer;  // IMSI of the UE whose service produced the CDR
};

struct BillingReport
{
  std::string run_id;
  std::size_t cdrs = 0;
  std::size_t resolved = 0;
  std::size_t unresolvable = 0;
  std::size_t wrong = 0; // corrected answer differs from the consumer
  /// IMSI -> service -> count, from resolved CDRs.
  std::map<std::string, std::map<std::string, std::size_t>> totals;
  /// IMSI -> service -> count, from the UEs' own service records.
  std::map<std::string, std::map<std::string, std::size_t>> consumed;
  std::vector<Misattribution> misattributions;
  std::vector<std::string> unresolved;

  bool totals_match() const { return totals == consumed; }
  Record to_json() const;
  std::string to_text() const;
};

/// Resolves every CDR in the trace against the allocation log. The grace
/// window defaults to the cdr_grace of the trace header. Throws config_error
/// when the two come from different runs.
BillingReport compute_billing(std::string_view trace_jsonl,
                              std::string_view log_jsonl,
                              std::optional<SimTime> grace = std::nullopt);

struct SizingReport
{
  double occupancy = 0;
  double expected_tries = 0;
  double avg_phn = 0;
  double footprint = 0;
  std::optional<double> empirical_tries;
  std::size_t empirical_allocations = 0;

  Record to_json() const;
  std::string to_text() const;
};

/// Expected tries 1/(1 - occupancy) and per-subscriber footprint
/// avg_phn + 3 (P_HN, p1, p2, IMSI). With allocations > 0 also measures
/// rejection sampling on a pool of 10^digits held at that occupancy.
/// Throws invalid_argument unless 0 <= occupancy < 1 and avg_phn >= 0.
SizingReport compute_sizing(double occupancy,
                            double avg_phn,
                            std::size_t allocations = 0,
                            unsigned digits = 4,
                            std::uint64_t seed = 1);

} // namespace pseudoaka::sim
