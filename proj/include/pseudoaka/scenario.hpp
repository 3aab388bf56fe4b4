#pragma once

#include "pseudoaka/codec.hpp"
#include "pseudoaka/crypto.hpp"
#include "pseudoaka/trace.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pseudoaka::sim {

enum class Action
{
  attach_lte,
  attach_5g,
  reauth_guti,
  resume,
  page,
  service,
  batch_fetch,
  policy_sweep,
};

inline constexpr std::size_t action_count = 8;
std::string_view to_string(Action a);

using ActionMix = std::array<double, action_count>;

struct SnSpec
{
  std::string id;
  crypto::Flavor flavor = crypto::Flavor::lte;
  bool li_patched = false;
  bool li_key_binding = false;
  std::size_t batch_size = 1;
};

/// Per-subscriber deviations from the defaults, addressed by index.
struct UeOverride
{
  std::size_t index = 0;
  std::optional<std::string> home_lte;
  std::optional<std::string> home_5g;
  std::optional<std::size_t> max_size;
  std::optional<SimTime> max_age;
  std::optional<bool> retain_stale_guti;
  std::optional<bool> li_key_binding;
  std::optional<ActionMix> mix;
};

enum class AdversaryKind
{
  passive_eavesdrop,
  active_lte_catcher,
  active_5g_catcher,
  malicious_lu_sn,
  rand_forger,
};

std::string_view to_string(AdversaryKind k);

struct AdversarySpec
{
  AdversaryKind kind = AdversaryKind::passive_eavesdrop;
  std::string id;
  /// Mean seconds between actions; ignored for the passive eavesdropper.
  SimTime interval = 600;
  /// Subscriber indices to target; empty means all.
  std::vector<std::size_t> targets;
};

struct FaultSpec
{
  std::size_t target = 0;
  SimTime at = 0;
  /// New d2; when absent, d2 becomes the newest HN counter plus offset.
  std::optional<std::uint32_t> value;
  std::uint32_t offset = 1000;
};

struct Scenario
{
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  SimTime duration = 86400;
  std::size_t events = 1000;

  NetworkId network{ "001", "01" };
  unsigned pool_digits = 4;
  std::size_t cap = 10;
  std::uint8_t hnpki = 1;
  SimTime guti_lifetime = 86400;

  std::vector<SnSpec> serving_networks;

  std::size_t subscribers = 10;
  bool public_key = true;
  SimTime max_age = 86400;
  std::size_t max_size = 10;
  bool ue_li_key_binding = false;
  std::vector<UeOverride> overrides;

  SimTime mean_interval = 60;
  ActionMix mix{ 3, 2, 2, 1, 1, 3, 1, 1 };
  double switch_probability = 0.3;
  double page_reauth_probability = 0.5;
  std::size_t max_batch = 4;
  bool bootstrap_attach = true;

  std::vector<AdversarySpec> adversaries;
  std::vector<FaultSpec> faults;

  /// Events between pool-occupancy samples in the report.
  std::size_t sample_every = 500;

  const SnSpec* find_sn(const std::string& id) const;
};

/// Parses and validates a scenario. Throws config_error with a line and
/// column for syntax errors and a field path for schema errors.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// Canonical JSON rendering; parse_scenario(to_json(s)) reproduces s.
nlohmann::ordered_json to_json(const Scenario& s);

} // namespace pseudoaka::sim
