#include "pseudoaka/scenario.hpp"
#include "pseudoaka/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pseudoaka::sim {

namespace {

constexpr std::array<std::string_view, action_count> action_names = {
  "attach_lte", "attach_5g", "reauth_guti", "resume", "page", "service", "batch_fetch", "policy_sweep",
};

constexpr std::array<std::string_view, 5> adversary_names = {
  "passive-eavesdrop", "active-lte-catcher", "active-5g-catcher", "malicious-lu-sn", "rand-forger",
};

using json = nlohmann::json;

[[noreturn]] void
schema_error(const std::string& path, const std::string& what)
{
  throw ProtocolError(ErrorCode::config_error, path + ": " + what);
}

void
check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed)
{
  if (!obj.is_object()) {
    schema_error(path, "expected an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error(path, "unknown field '" + key + "'");
    }
  }
}

template<typename T>
T
get(const json& obj, const std::string& path, const char* key, T fallback)
{
  if (!obj.contains(key)) {
    return fallback;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    schema_error(path + "." + key, "wrong type");
  }
}

ActionMix
parse_mix(const json& j, const std::string& path)
{
  if (!j.is_object()) {
    schema_error(path, "expected an object of action weights");
  }
  ActionMix mix{};
  for (const auto& [key, value] : j.items()) {
    auto it = std::find(action_names.begin(), action_names.end(), key);
    if (it == action_names.end()) {
      schema_error(path, "unknown action '" + key + "'");
    }
    if (!value.is_number() || value.get<double>() < 0) {
      schema_error(path + "." + key, "weight must be a non-negative number");
    }
    mix[static_cast<std::size_t>(it - action_names.begin())] = value.get<double>();
  }
  double total = 0;
  for (double w : mix) {
    total += w;
  }
  if (total <= 0) {
    schema_error(path, "weights must not all be zero");
  }
  return mix;
}

crypto::Flavor
parse_flavor(const std::string& s, const std::string& path)
{
  if (s == "lte") {
    return crypto::Flavor::lte;
  }
  if (s == "5g") {
    return crypto::Flavor::fiveg;
  }
  schema_error(path, "flavor must be \"lte\" or \"5g\"");
}

std::pair<std::size_t, std::size_t>
line_and_column(std::string_view text, std::size_t byte)
{
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); i++) {
    if (text[i] == '\n') {
      line++;
      column = 1;
    } else {
      column++;
    }
  }
  return { line, column };
}

json
mix_json(const ActionMix& mix)
{
  json j = json::object();
  for (std::size_t i = 0; i < action_count; i++) {
    j[std::string(action_names[i])] = mix[i];
  }
  return j;
}

} // namespace

std::string_view
to_string(Action a)
{
  return action_names[static_cast<std::size_t>(a)];
}

std::string_view
to_string(AdversaryKind k)
{
  return adversary_names[static_cast<std::size_t>(k)];
}

const SnSpec*
Scenario::find_sn(const std::string& id) const
{
  for (const auto& sn : serving_networks) {
    if (sn.id == id) {
      return &sn;
    }
  }
  return nullptr;
}

Scenario
parse_scenario(std::string_view text)
{
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ProtocolError(ErrorCode::config_error,
                        "line " + std::to_string(line) + ", column " + std::to_string(column) + ": syntax error");
  }
  check_keys(root,
             "scenario",
             { "name", "seed", "duration", "events", "network", "serving_networks", "subscribers", "workload",
               "adversaries", "faults", "report" });

  Scenario s;
  s.name = get<std::string>(root, "scenario", "name", s.name);
  s.seed = get<std::uint64_t>(root, "scenario", "seed", s.seed);
  s.duration = get<SimTime>(root, "scenario", "duration", s.duration);
  s.events = get<std::size_t>(root, "scenario", "events", s.events);
  if (s.duration <= 0) {
    schema_error("scenario.duration", "must be positive");
  }
  if (s.events == 0) {
    schema_error("scenario.events", "must be positive");
  }

  if (root.contains("network")) {
    const auto& n = root.at("network");
    check_keys(n, "network", { "mcc", "mnc", "pool_digits", "cap", "hnpki", "guti_lifetime" });
    s.network.mcc = get<std::string>(n, "network", "mcc", s.network.mcc);
    s.network.mnc = get<std::string>(n, "network", "mnc", s.network.mnc);
    s.pool_digits = get<unsigned>(n, "network", "pool_digits", s.pool_digits);
    s.cap = get<std::size_t>(n, "network", "cap", s.cap);
    s.hnpki = get<std::uint8_t>(n, "network", "hnpki", s.hnpki);
    s.guti_lifetime = get<SimTime>(n, "network", "guti_lifetime", s.guti_lifetime);
  }
  try {
    s.network.validate();
  } catch (const ProtocolError& e) {
    schema_error("network", e.what());
  }
  if (s.network.mnc.size() != 2) {
    schema_error("network.mnc", "10-digit MSINs need a 2-digit MNC");
  }
  if (s.pool_digits < 1 || s.pool_digits > 10) {
    schema_error("network.pool_digits", "must be in [1, 10]");
  }
  if (s.guti_lifetime <= 0) {
    schema_error("network.guti_lifetime", "must be positive");
  }

  if (!root.contains("serving_networks") || !root.at("serving_networks").is_array() ||
      root.at("serving_networks").empty()) {
    schema_error("serving_networks", "at least one serving network is required");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < root.at("serving_networks").size(); i++) {
    const auto& j = root.at("serving_networks")[i];
    const auto path = "serving_networks[" + std::to_string(i) + "]";
    check_keys(j, path, { "id", "flavor", "li_patched", "li_key_binding", "batch_size" });
    SnSpec sn;
    sn.id = get<std::string>(j, path, "id", "");
    if (sn.id.empty()) {
      schema_error(path + ".id", "required");
    }
    if (!ids.insert(sn.id).second) {
      schema_error(path + ".id", "duplicate id '" + sn.id + "'");
    }
    sn.flavor = parse_flavor(get<std::string>(j, path, "flavor", "lte"), path + ".flavor");
    sn.li_patched = get<bool>(j, path, "li_patched", false);
    sn.li_key_binding = get<bool>(j, path, "li_key_binding", false);
    sn.batch_size = get<std::size_t>(j, path, "batch_size", 1);
    if (sn.batch_size < 1 || sn.batch_size > 8) {
      schema_error(path + ".batch_size", "must be in [1, 8]");
    }
    s.serving_networks.push_back(sn);
  }

  if (root.contains("subscribers")) {
    const auto& j = root.at("subscribers");
    check_keys(j, "subscribers", { "count", "public_key", "max_age", "max_size", "li_key_binding", "overrides" });
    s.subscribers = get<std::size_t>(j, "subscribers", "count", s.subscribers);
    s.public_key = get<bool>(j, "subscribers", "public_key", s.public_key);
    s.max_age = get<SimTime>(j, "subscribers", "max_age", s.max_age);
    s.max_size = get<std::size_t>(j, "subscribers", "max_size", s.max_size);
    s.ue_li_key_binding = get<bool>(j, "subscribers", "li_key_binding", s.ue_li_key_binding);
    if (j.contains("overrides")) {
      for (std::size_t i = 0; i < j.at("overrides").size(); i++) {
        const auto& o = j.at("overrides")[i];
        const auto path = "subscribers.overrides[" + std::to_string(i) + "]";
        check_keys(o,
                   path,
                   { "index", "home_lte", "home_5g", "max_size", "max_age", "retain_stale_guti", "li_key_binding", "mix" });
        UeOverride ov;
        if (!o.contains("index")) {
          schema_error(path + ".index", "required");
        }
        ov.index = get<std::size_t>(o, path, "index", 0);
        if (o.contains("home_lte")) {
          ov.home_lte = get<std::string>(o, path, "home_lte", "");
        }
        if (o.contains("home_5g")) {
          ov.home_5g = get<std::string>(o, path, "home_5g", "");
        }
        if (o.contains("max_size")) {
          ov.max_size = get<std::size_t>(o, path, "max_size", 0);
        }
        if (o.contains("max_age")) {
          ov.max_age = get<SimTime>(o, path, "max_age", 0);
        }
        if (o.contains("retain_stale_guti")) {
          ov.retain_stale_guti = get<bool>(o, path, "retain_stale_guti", false);
        }
        if (o.contains("li_key_binding")) {
          ov.li_key_binding = get<bool>(o, path, "li_key_binding", false);
        }
        if (o.contains("mix")) {
          ov.mix = parse_mix(o.at("mix"), path + ".mix");
        }
        s.overrides.push_back(ov);
      }
    }
  }
  if (s.subscribers == 0) {
    schema_error("subscribers.count", "must be positive");
  }
  for (std::size_t i = 0; i < s.overrides.size(); i++) {
    const auto& ov = s.overrides[i];
    const auto path = "subscribers.overrides[" + std::to_string(i) + "]";
    if (ov.index >= s.subscribers) {
      schema_error(path + ".index", "refers to unknown subscriber " + std::to_string(ov.index));
    }
    if (ov.home_lte) {
      const auto* sn = s.find_sn(*ov.home_lte);
      if (!sn || sn->flavor != crypto::Flavor::lte) {
        schema_error(path + ".home_lte", "unknown LTE serving network '" + *ov.home_lte + "'");
      }
    }
    if (ov.home_5g) {
      const auto* sn = s.find_sn(*ov.home_5g);
      if (!sn || sn->flavor != crypto::Flavor::fiveg) {
        schema_error(path + ".home_5g", "unknown 5G serving network '" + *ov.home_5g + "'");
      }
    }
  }

  if (root.contains("workload")) {
    const auto& w = root.at("workload");
    check_keys(w,
               "workload",
               { "mean_interval", "mix", "switch_probability", "page_reauth_probability", "max_batch", "bootstrap_attach" });
    s.mean_interval = get<SimTime>(w, "workload", "mean_interval", s.mean_interval);
    if (w.contains("mix")) {
      s.mix = parse_mix(w.at("mix"), "workload.mix");
    }
    s.switch_probability = get<double>(w, "workload", "switch_probability", s.switch_probability);
    s.page_reauth_probability = get<double>(w, "workload", "page_reauth_probability", s.page_reauth_probability);
    s.max_batch = get<std::size_t>(w, "workload", "max_batch", s.max_batch);
    s.bootstrap_attach = get<bool>(w, "workload", "bootstrap_attach", s.bootstrap_attach);
  }
  if (s.mean_interval < 1) {
    schema_error("workload.mean_interval", "must be at least 1");
  }
  if (s.max_batch < 1 || s.max_batch > 8) {
    schema_error("workload.max_batch", "must be in [1, 8]");
  }

  if (root.contains("adversaries")) {
    for (std::size_t i = 0; i < root.at("adversaries").size(); i++) {
      const auto& a = root.at("adversaries")[i];
      const auto path = "adversaries[" + std::to_string(i) + "]";
      check_keys(a, path, { "kind", "id", "interval", "targets" });
      AdversarySpec adv;
      const auto kind = get<std::string>(a, path, "kind", "");
      auto it = std::find(adversary_names.begin(), adversary_names.end(), kind);
      if (it == adversary_names.end()) {
        schema_error(path + ".kind", "unknown adversary '" + kind + "'");
      }
      adv.kind = static_cast<AdversaryKind>(it - adversary_names.begin());
      adv.id = get<std::string>(a, path, "id", std::string(kind) + "-" + std::to_string(i));
      if (s.find_sn(adv.id)) {
        schema_error(path + ".id", "clashes with a serving network id");
      }
      adv.interval = get<SimTime>(a, path, "interval", adv.interval);
      if (adv.interval < 1) {
        schema_error(path + ".interval", "must be at least 1");
      }
      adv.targets = get<std::vector<std::size_t>>(a, path, "targets", {});
      for (auto t : adv.targets) {
        if (t >= s.subscribers) {
          schema_error(path + ".targets", "refers to unknown subscriber " + std::to_string(t));
        }
      }
      s.adversaries.push_back(adv);
    }
  }

  if (root.contains("faults")) {
    for (std::size_t i = 0; i < root.at("faults").size(); i++) {
      const auto& f = root.at("faults")[i];
      const auto path = "faults[" + std::to_string(i) + "]";
      check_keys(f, path, { "target", "kind", "at", "value", "offset" });
      if (get<std::string>(f, path, "kind", "corrupt_d2") != "corrupt_d2") {
        schema_error(path + ".kind", "only corrupt_d2 is supported");
      }
      FaultSpec fault;
      fault.target = get<std::size_t>(f, path, "target", 0);
      if (fault.target >= s.subscribers) {
        schema_error(path + ".target", "refers to unknown subscriber " + std::to_string(fault.target));
      }
      fault.at = get<SimTime>(f, path, "at", 0);
      if (f.contains("value")) {
        fault.value = get<std::uint32_t>(f, path, "value", 0);
        if (*fault.value > counter_max) {
          schema_error(path + ".value", "exceeds 24 bits");
        }
      }
      fault.offset = get<std::uint32_t>(f, path, "offset", fault.offset);
      s.faults.push_back(fault);
    }
  }

  if (root.contains("report")) {
    const auto& r = root.at("report");
    check_keys(r, "report", { "sample_every" });
    s.sample_every = get<std::size_t>(r, "report", "sample_every", s.sample_every);
    if (s.sample_every == 0) {
      schema_error("report.sample_every", "must be positive");
    }
  }

  bool has_lte = false;
  for (const auto& sn : s.serving_networks) {
    has_lte |= sn.flavor == crypto::Flavor::lte;
  }
  if (!has_lte && (s.mix[0] > 0 || s.mix[6] > 0)) {
    schema_error("workload.mix", "LTE actions need an LTE serving network");
  }
  return s;
}

Scenario
load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ProtocolError(ErrorCode::config_error, "cannot read scenario file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ProtocolError& e) {
    throw ProtocolError(ErrorCode::config_error, path + ": " + e.what());
  }
}

nlohmann::ordered_json
to_json(const Scenario& s)
{
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["events"] = s.events;
  j["network"] = { { "mcc", s.network.mcc },   { "mnc", s.network.mnc }, { "pool_digits", s.pool_digits },
                   { "cap", s.cap },           { "hnpki", s.hnpki },     { "guti_lifetime", s.guti_lifetime } };
  auto& sns = j["serving_networks"] = nlohmann::ordered_json::array();
  for (const auto& sn : s.serving_networks) {
    sns.push_back({ { "id", sn.id },
                    { "flavor", sn.flavor == crypto::Flavor::lte ? "lte" : "5g" },
                    { "li_patched", sn.li_patched },
                    { "li_key_binding", sn.li_key_binding },
                    { "batch_size", sn.batch_size } });
  }
  nlohmann::ordered_json subs;
  subs["count"] = s.subscribers;
  subs["public_key"] = s.public_key;
  subs["max_age"] = s.max_age;
  subs["max_size"] = s.max_size;
  subs["li_key_binding"] = s.ue_li_key_binding;
  auto& ovs = subs["overrides"] = nlohmann::ordered_json::array();
  for (const auto& ov : s.overrides) {
    nlohmann::ordered_json o;
    o["index"] = ov.index;
    if (ov.home_lte) {
      o["home_lte"] = *ov.home_lte;
    }
    if (ov.home_5g) {
      o["home_5g"] = *ov.home_5g;
    }
    if (ov.max_size) {
      o["max_size"] = *ov.max_size;
    }
    if (ov.max_age) {
      o["max_age"] = *ov.max_age;
    }
    if (ov.retain_stale_guti) {
      o["retain_stale_guti"] = *ov.retain_stale_guti;
    }
    if (ov.li_key_binding) {
      o["li_key_binding"] = *ov.li_key_binding;
    }
    if (ov.mix) {
      o["mix"] = mix_json(*ov.mix);
    }
    ovs.push_back(std::move(o));
  }
  j["subscribers"] = std::move(subs);
  j["workload"] = { { "mean_interval", s.mean_interval },
                    { "mix", mix_json(s.mix) },
                    { "switch_probability", s.switch_probability },
                    { "page_reauth_probability", s.page_reauth_probability },
                    { "max_batch", s.max_batch },
                    { "bootstrap_attach", s.bootstrap_attach } };
  auto& advs = j["adversaries"] = nlohmann::ordered_json::array();
  for (const auto& a : s.adversaries) {
    advs.push_back({ { "kind", std::string(to_string(a.kind)) },
                     { "id", a.id },
                     { "interval", a.interval },
                     { "targets", a.targets } });
  }
  auto& faults = j["faults"] = nlohmann::ordered_json::array();
  for (const auto& f : s.faults) {
    nlohmann::ordered_json o;
    o["target"] = f.target;
    o["kind"] = "corrupt_d2";
    o["at"] = f.at;
    if (f.value) {
      o["value"] = *f.value;
    }
    o["offset"] = f.offset;
    faults.push_back(std::move(o));
  }
  j["report"] = { { "sample_every", s.sample_every } };
  return j;
}

} // namespace pseudoaka::sim
