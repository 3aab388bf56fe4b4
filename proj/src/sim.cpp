#include "pseudoaka/sim.hpp"
#include "pseudoaka/checks.hpp"
#include "pseudoaka/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <queue>
#include <set>
#include <thread>

namespace pseudoaka::sim {

namespace {

constexpr std::size_t max_captured = 4;
constexpr std::array<const char*, 3> service_tags{ "data", "voice", "sms" };

Record
subscriber_json(const hn::SubscriberRecord& sub)
{
  auto entry = [](const PseudonymEntry& e) { return Record{ { "p", format_msin(e.value) }, { "d", e.counter } }; };
  Record r;
  r["imsi"] = sub.imsi.to_string();
  r["current"] = entry(sub.current);
  r["next"] = entry(sub.next);
  r["future"] = sub.future ? entry(*sub.future) : Record();
  Record phn = Record::array();
  for (const auto& e : sub.retired) {
    phn.push_back(entry(e));
  }
  r["p_hn"] = std::move(phn);
  r["ctr"] = sub.ctr;
  return r;
}

double
unit(Rng& rng)
{
  return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

Action
pick_action(const ActionMix& mix, Rng& rng)
{
  double total = 0;
  for (auto w : mix) {
    total += w;
  }
  double x = unit(rng) * total;
  for (std::size_t i = 0; i < action_count; i++) {
    if (x < mix[i]) {
      return static_cast<Action>(i);
    }
    x -= mix[i];
  }
  // Rounding left x just above the last bucket.
  for (std::size_t i = action_count; i-- > 0;) {
    if (mix[i] > 0) {
      return static_cast<Action>(i);
    }
  }
  return Action::attach_lte;
}

SimTime
gap(Rng& rng, SimTime mean)
{
  // Uniform on [1, 2 * mean - 1], so the mean is `mean`.
  return 1 + static_cast<SimTime>(rng.below(static_cast<std::uint64_t>(2 * mean - 1)));
}

} // namespace

Record
RunCounters::to_json() const
{
  Record r;
  r["attaches"] = attaches;
  r["attach_failures"] = attach_failures;
  r["lte_akas"] = lte_akas;
  r["fiveg_akas"] = fiveg_akas;
  r["suci_akas"] = suci_akas;
  r["pages"] = pages;
  r["page_timeouts"] = page_timeouts;
  r["services"] = services;
  r["services_rejected"] = services_rejected;
  r["batch_fetches"] = batch_fetches;
  r["resumes"] = resumes;
  r["sweeps"] = sweeps;
  r["reregistrations"] = reregistrations;
  r["removed_pseudonyms"] = removed_pseudonyms;
  r["idle"] = idle;
  r["catcher_inquiries"] = catcher_inquiries;
  r["malicious_lus"] = malicious_lus;
  r["forged_challenges"] = forged_challenges;
  r["forged_accepted"] = forged_accepted;
  r["failure_reasons"] = failure_reasons;
  return r;
}

std::string
make_run_id(const Scenario& scenario, std::uint64_t seed)
{
  const auto text = to_json(scenario).dump() + "#" + std::to_string(seed);
  static constexpr std::uint8_t key[] = { 'p', 's', 'e', 'u', 'd', 'o', 'a', 'k', 'a' };
  const auto digest = crypto::kdf(ByteView(key, sizeof key),
                                  "run-id",
                                  ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return to_hex(ByteView(digest.data(), 8));
}

// --- world construction --------------------------------------------------------

void
World::Tap::emit(SimTime t, std::string_view actor, std::string_view kind, Record fields)
{
  const auto record = make_record(t, actor, kind, fields);
  world_.on_record(record);
  if (world_.trace_out_) {
    *world_.trace_out_ += record.dump();
    *world_.trace_out_ += '\n';
  }
}

void
World::emit(SimTime t, std::string_view actor, std::string_view kind, Record fields)
{
  tap_.emit(t, actor, kind, std::move(fields));
}

World::World(const Scenario& scenario, std::uint64_t seed, std::string* trace_out)
  : scenario_(scenario)
  , seed_(seed)
  , run_id_(make_run_id(scenario, seed))
  , trace_out_(trace_out)
{
  Rng master(seed);
  Rng keygen = master.fork();

  Record header;
  header["run_id"] = run_id_;
  header["scenario"] = scenario_.name;
  header["seed"] = seed;
  header["cdr_grace"] = scenario_.guti_lifetime;
  Record sns = Record::array();
  for (const auto& s : scenario_.serving_networks) {
    sns.push_back(Record{
      { "id", s.id }, { "flavor", std::string(crypto::to_string(s.flavor)) }, { "li_patched", s.li_patched } });
  }
  header["serving_networks"] = std::move(sns);
  Record advs = Record::array();
  for (const auto& a : scenario_.adversaries) {
    advs.push_back(Record{ { "id", a.id }, { "kind", std::string(to_string(a.kind)) } });
  }
  header["adversaries"] = std::move(advs);
  emit(0, "sim", "header", std::move(header));

  hn::HnConfig hc;
  hc.network = scenario_.network;
  hc.pool_digits = scenario_.pool_digits;
  hc.cap = scenario_.cap;
  hc.hnpki = scenario_.hnpki;
  hc.cdr_grace = scenario_.guti_lifetime;
  hn_ = std::make_unique<hn::HomeNetwork>(hc, crypto::generate_hn_keypair(keygen), master.fork(), &tap_);

  for (const auto& s : scenario_.serving_networks) {
    sn::SnConfig sc;
    sc.id = s.id;
    sc.flavor = s.flavor;
    sc.li_patched = s.li_patched;
    sc.li_key_binding = s.li_key_binding;
    sc.batch_size = s.batch_size;
    sc.guti_lifetime = scenario_.guti_lifetime;
    sns_.push_back(std::make_unique<sn::ServingNetwork>(sc, *hn_, master.fork(), &tap_));
  }
  workload_rng_ = master.fork();
  for (std::size_t i = 0; i < scenario_.adversaries.size(); i++) {
    adversary_rngs_.push_back(master.fork());
  }

  std::set<std::uint64_t> msins;
  ues_.reserve(scenario_.subscribers);
  for (std::size_t i = 0; i < scenario_.subscribers; i++) {
    std::uint64_t msin = 0;
    do {
      msin = keygen.below(msin_space);
    } while (!msins.insert(msin).second);
    crypto::MasterKey k;
    keygen.fill(k.bytes);
    const Imsi imsi(scenario_.network, msin);
    const auto prov = hn_->provision(imsi, k, std::nullopt, 0);

    UeActor ue;
    ue.name = "ue-" + std::to_string(i);
    ue.index = i;
    ue.subscriber = hn_->lookup_identity(imsi);
    ue.usim = ue::provision_usim(imsi,
                                 k,
                                 prov.p1,
                                 prov.p2,
                                 scenario_.public_key ? std::optional<Key256>(hn_->public_key()) : std::nullopt,
                                 scenario_.hnpki);
    ue.usim.policy = ue::RemovalPolicy{ scenario_.max_age, scenario_.max_size };
    ue.usim.li_key_binding = scenario_.ue_li_key_binding;
    ue.rng = master.fork();
    for (const auto& o : scenario_.overrides) {
      if (o.index != i) {
        continue;
      }
      ue.home_lte = o.home_lte;
      ue.home_5g = o.home_5g;
      ue.mix = o.mix;
      if (o.max_size) {
        ue.usim.policy.max_size = *o.max_size;
      }
      if (o.max_age) {
        ue.usim.policy.max_age = *o.max_age;
      }
      if (o.retain_stale_guti) {
        ue.usim.retain_stale_guti = *o.retain_stale_guti;
      }
      if (o.li_key_binding) {
        ue.usim.li_key_binding = *o.li_key_binding;
      }
    }

    Record r;
    r["ue"] = ue.name;
    r["imsi"] = imsi.to_string();
    r["p1"] = format_msin(prov.p1.value);
    r["d1"] = prov.p1.counter;
    r["p2"] = format_msin(prov.p2.value);
    r["d2"] = prov.p2.counter;
    emit(0, "sim", "ue-provisioned", std::move(r));

    ue_by_name_[ue.name] = i;
    ues_.push_back(std::move(ue));
  }
}

sn::ServingNetwork&
World::sn(const std::string& id)
{
  for (auto& s : sns_) {
    if (s->id() == id) {
      return *s;
    }
  }
  throw ProtocolError(ErrorCode::config_error, "unknown serving network " + id);
}

sn::UeLink
World::link(UeActor& ue)
{
  return sn::UeLink{ ue.name, &ue.usim, &ue.rng };
}

void
World::on_record(const Record& record)
{
  assessor_.observe(record);
  const auto& actor = record["actor"].get_ref<const std::string&>();
  const auto& kind = record["kind"].get_ref<const std::string&>();
  if (kind == "challenge") {
    auto& q = captured_[record.value("to", "")];
    q.emplace_back(array_from_hex<16>(record.value("rand", "")), array_from_hex<16>(record.value("autn", "")));
    if (q.size() > max_captured) {
      q.pop_front();
    }
  } else if (kind == "identity-response" && record.value("type", "") == "pseudonym") {
    if (auto it = ue_by_name_.find(actor); it != ue_by_name_.end()) {
      const auto value = record.value("value", "");
      if (value == ues_[it->second].usim.imsi.to_string() && !tap_problem_) {
        tap_problem_ = actor + " sent its IMSI as identity";
      }
    }
  } else if (actor == "hn" && kind == "rotation") {
    if (record.value("cause", "") == "lu") {
      counters_.rotations_lu++;
    } else {
      counters_.rotations_5g++;
    }
  }
}

// --- bookkeeping ---------------------------------------------------------------

sn::AttachOutcome
World::attach(UeActor& ue, const std::string& sn_id, sn::Trigger trigger, SimTime now)
{
  auto& net = sn(sn_id);
  const auto out = net.attach(link(ue), now, trigger);
  const bool lte = net.config().flavor == crypto::Flavor::lte;
  if (out.success) {
    counters_.attaches++;
    ue.attached_sn = sn_id;
    if (lte) {
      counters_.lte_akas++;
    } else {
      counters_.fiveg_akas++;
      if (trigger == sn::Trigger::inquiry) {
        counters_.suci_akas++;
      }
    }
  } else {
    counters_.attach_failures++;
    counters_.failure_reasons[out.reason]++;
  }

  if (ue.faulted && ue.recovery) {
    auto& r = recoveries_[*ue.recovery];
    if (out.payload && out.payload->ecf != 0) {
      r.ecf_seen = true;
    }
    if (lte && out.success) {
      r.lte_akas++;
      if (out.update != ue::UpdateKind::none) {
        r.lte_updates++;
      }
    }
    if (!lte && trigger == sn::Trigger::inquiry && out.payload) {
      r.fiveg_akas++;
    }
  }
  return out;
}

std::size_t
World::inject_fault(const FaultSpec& fault, SimTime now)
{
  auto& ue = ues_.at(fault.target);
  const auto& sub = hn_->subscriber(ue.subscriber);
  const std::uint32_t newest = sub.future ? sub.future->counter : sub.next.counter;
  const std::uint32_t value =
    fault.value ? *fault.value : static_cast<std::uint32_t>(std::min<std::uint64_t>(std::uint64_t{ newest } + fault.offset, counter_max));

  Recovery rec;
  rec.ue = ue.name;
  rec.fault_at = now;
  rec.corrupted_d2 = value;
  rec.hn_newest = newest;
  rec.desync = value > newest;
  recoveries_.push_back(rec);

  ue.usim.slot2.counter = value;
  ue.faulted = true;
  ue.recovery = recoveries_.size() - 1;

  Record r;
  r["ue"] = ue.name;
  r["fault"] = "corrupt_d2";
  r["d2"] = value;
  r["hn_newest"] = newest;
  emit(now, "sim", "fault", std::move(r));
  return recoveries_.size() - 1;
}

std::optional<Violation>
World::check(SimTime now)
{
  auto fail = [&](std::string check, std::string detail, std::string ue = {}, Record snapshot = {}) {
    Violation v;
    v.check = std::move(check);
    v.detail = std::move(detail);
    v.t = now;
    v.ue = std::move(ue);
    v.snapshot = std::move(snapshot);
    return v;
  };

  if (tap_problem_) {
    return fail("identity-exposure", *tap_problem_);
  }
  if (counters_.forged_accepted > 0) {
    return fail("forged-challenge", "a UE accepted a forged challenge");
  }
  if (auto p = check_uniqueness(*hn_)) {
    return fail("uniqueness", *p);
  }
  for (const auto& sub : hn_->subscribers()) {
    if (auto p = check_subscriber(sub, scenario_.cap)) {
      return fail("hn-structure", *p, {}, subscriber_json(sub));
    }
  }
  for (auto& ue : ues_) {
    const auto& sub = hn_->subscriber(ue.subscriber);
    const auto structure = check_usim(ue.usim);
    const auto sync = check_sync(ue.usim, sub);
    if (ue.faulted) {
      if (!structure && !sync) {
        ue.faulted = false;
        auto& r = recoveries_[*ue.recovery];
        r.recovered = true;
        r.recovered_at = now;
        Record rec;
        rec["ue"] = ue.name;
        rec["fiveg_akas"] = r.fiveg_akas;
        rec["lte_akas"] = r.lte_akas;
        rec["ecf"] = r.ecf_seen;
        emit(now, "sim", "recovered", std::move(rec));
      }
      continue;
    }
    if (structure) {
      return fail("ue-structure", *structure, ue.name, ue::to_json(ue.usim));
    }
    if (sync) {
      return fail("sync", *sync, ue.name, Record{ { "ue", ue::to_json(ue.usim) }, { "hn", subscriber_json(sub) } });
    }
  }
  if (recoveries_.empty() && hn_->stats().ecf_set > 0) {
    return fail("ecf-without-fault", "home network set ECF in a run without faults");
  }
  return std::nullopt;
}

void
World::sample(SimTime now)
{
  std::size_t phn = 0;
  for (const auto& sub : hn_->subscribers()) {
    phn += sub.retired.size();
  }
  OccupancySample s;
  s.t = now;
  s.allocated = hn_->pool().allocated_count();
  s.occupancy = hn_->pool().occupancy();
  s.mean_phn = ues_.empty() ? 0.0 : static_cast<double>(phn) / static_cast<double>(ues_.size());
  samples_.push_back(s);
}

// --- workload ------------------------------------------------------------------

const ActionMix&
World::mix_of(const UeActor& ue) const
{
  return ue.mix ? *ue.mix : scenario_.mix;
}

std::optional<std::string>
World::choose_sn(UeActor& ue, crypto::Flavor flavor)
{
  std::vector<const std::string*> candidates;
  for (const auto& s : sns_) {
    if (s->config().flavor == flavor) {
      candidates.push_back(&s->id());
    }
  }
  if (candidates.empty()) {
    return std::nullopt;
  }
  const auto& home = flavor == crypto::Flavor::lte ? ue.home_lte : ue.home_5g;
  if (home) {
    return home;
  }
  if (ue.attached_sn && sn(*ue.attached_sn).config().flavor == flavor &&
      !workload_rng_.chance(scenario_.switch_probability)) {
    return ue.attached_sn;
  }
  return *candidates[workload_rng_.below(candidates.size())];
}

UeActor*
World::owner_of_guti(const std::string& sn_id, std::uint32_t guti)
{
  for (auto& ue : ues_) {
    auto it = ue.usim.guti_contexts.find(sn_id);
    if (it != ue.usim.guti_contexts.end() && it->second.guti == guti) {
      return &ue;
    }
  }
  return nullptr;
}

void
World::page(SimTime now)
{
  auto& net = *sns_[workload_rng_.below(sns_.size())];
  const auto& table = net.guti_table();
  if (table.empty()) {
    counters_.idle++;
    return;
  }
  auto it = table.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(workload_rng_.below(table.size())));
  const auto guti = it->first;
  UeActor* owner = owner_of_guti(net.id(), guti);
  const bool reachable = owner && owner->attached_sn == net.id();
  const bool by_identity = net.config().flavor == crypto::Flavor::lte && workload_rng_.chance(0.5);
  const bool reauth = workload_rng_.chance(scenario_.page_reauth_probability);

  counters_.pages++;
  const auto ue_link = owner ? link(*owner) : sn::UeLink{ "unknown", &nobody_, &nobody_rng_ };
  const auto out = net.page(ue_link, guti, by_identity, reachable, reauth, now);
  if (!out.answered) {
    counters_.page_timeouts++;
  }
  if (out.reauth && owner) {
    // Account the paging-triggered AKA like any other attach.
    const auto& r = *out.reauth;
    if (r.success) {
      counters_.attaches++;
      net.config().flavor == crypto::Flavor::lte ? counters_.lte_akas++ : counters_.fiveg_akas++;
    } else {
      counters_.attach_failures++;
      counters_.failure_reasons[r.reason]++;
    }
    if (owner->faulted && owner->recovery) {
      auto& rec = recoveries_[*owner->recovery];
      if (r.payload && r.payload->ecf != 0) {
        rec.ecf_seen = true;
      }
      if (net.config().flavor == crypto::Flavor::lte && r.success) {
        rec.lte_akas++;
        if (r.update != ue::UpdateKind::none) {
          rec.lte_updates++;
        }
      }
    }
  }
}

void
World::run_action(UeActor& ue, Action action, SimTime now)
{
  using crypto::Flavor;
  auto attach_new = [&](Flavor preferred) {
    auto id = choose_sn(ue, preferred);
    if (!id) {
      id = choose_sn(ue, preferred == Flavor::lte ? Flavor::fiveg : Flavor::lte);
    }
    if (id) {
      attach(ue, *id, sn::Trigger::inquiry, now);
    }
  };
  auto attached_context = [&]() -> const ue::GutiContext* {
    if (!ue.attached_sn) {
      return nullptr;
    }
    auto it = ue.usim.guti_contexts.find(*ue.attached_sn);
    return it == ue.usim.guti_contexts.end() ? nullptr : &it->second;
  };

  switch (action) {
    case Action::attach_lte:
      attach_new(Flavor::lte);
      return;
    case Action::attach_5g:
      attach_new(Flavor::fiveg);
      return;
    case Action::reauth_guti:
      if (attached_context()) {
        attach(ue, *ue.attached_sn, sn::Trigger::guti, now);
      } else {
        attach_new(workload_rng_.chance(0.5) ? Flavor::lte : Flavor::fiveg);
      }
      return;
    case Action::resume: {
      std::vector<std::string> options;
      for (const auto& [id, ctx] : ue.usim.guti_contexts) {
        if (id != ue.attached_sn) {
          options.push_back(id);
        }
      }
      if (options.empty()) {
        counters_.idle++;
        return;
      }
      ue.attached_sn = options[workload_rng_.below(options.size())];
      counters_.resumes++;
      emit(now, ue.name, "resume", Record{ { "sn", *ue.attached_sn } });
      return;
    }
    case Action::page:
      page(now);
      return;
    case Action::service: {
      const std::string tag = service_tags[workload_rng_.below(service_tags.size())];
      if (!ue.attached_sn) {
        counters_.idle++;
        return;
      }
      if (sn(*ue.attached_sn).service(link(ue), tag, now)) {
        counters_.services++;
      } else {
        counters_.services_rejected++;
      }
      return;
    }
    case Action::batch_fetch: {
      const auto* ctx = attached_context();
      if (!ctx || ctx->flavor != Flavor::lte) {
        counters_.idle++;
        return;
      }
      auto& net = sn(*ue.attached_sn);
      const auto entry = net.guti_table().find(ctx->guti);
      if (entry == net.guti_table().end()) {
        counters_.idle++;
        return;
      }
      const auto n = workload_rng_.between(2, std::max<std::size_t>(2, scenario_.max_batch));
      net.batch_fetch(entry->second.identity, n, now);
      counters_.batch_fetches++;
      return;
    }
    case Action::policy_sweep: {
      counters_.sweeps++;
      if (ue.attached_sn) {
        if (const auto intent = ue::reregister_before_drop(ue.usim, *ue.attached_sn)) {
          counters_.reregistrations++;
          emit(now,
               ue.name,
               "reregister",
               Record{ { "sn", intent->sn_id }, { "stale", format_msin(intent->stale_pseudonym) } });
          attach(ue, intent->sn_id, sn::Trigger::inquiry, now);
        }
      }
      const auto removed = ue::apply_removal_policy(ue.usim, now, ue.attached_sn);
      counters_.removed_pseudonyms += removed.size();
      Record values = Record::array();
      for (const auto& e : removed) {
        values.push_back(format_msin(e.value));
      }
      emit(now, ue.name, "policy-sweep", Record{ { "removed", std::move(values) } });
      return;
    }
  }
}

void
World::run_adversary(const AdversarySpec& adv, Rng& rng, SimTime now)
{
  const auto pick = adv.targets.empty() ? rng.below(ues_.size()) : adv.targets[rng.below(adv.targets.size())];
  auto& ue = ues_.at(pick);

  switch (adv.kind) {
    case AdversaryKind::passive_eavesdrop:
      return;
    case AdversaryKind::active_lte_catcher: {
      counters_.catcher_inquiries++;
      emit(now, adv.id, "identity-request", Record{ { "to", ue.name } });
      const auto q = ue::respond_identity_lte(ue.usim, adv.id);
      emit(now,
           ue.name,
           "identity-response",
           Record{ { "sn", adv.id }, { "type", "pseudonym" }, { "value", q.to_string() } });
      return;
    }
    case AdversaryKind::active_5g_catcher: {
      counters_.catcher_inquiries++;
      emit(now, adv.id, "identity-request", Record{ { "to", ue.name } });
      const auto suci = encode_suci(ue::respond_identity_5g(ue.usim, ue.rng));
      emit(now, ue.name, "identity-response", Record{ { "sn", adv.id }, { "type", "suci" }, { "value", to_hex(suci) } });
      return;
    }
    case AdversaryKind::malicious_lu_sn: {
      const auto& sub = hn_->subscriber(ue.subscriber);
      std::uint64_t q = 0;
      switch (rng.below(5)) {
        case 0:
          q = sub.imsi.msin();
          break;
        case 1:
          q = sub.current.value;
          break;
        case 2:
          q = sub.next.value;
          break;
        case 3:
          q = sub.future ? sub.future->value : sub.next.value;
          break;
        default:
          q = rng.below(hn_->pool().space());
          break;
      }
      const Imsi identity(scenario_.network, q);
      counters_.malicious_lus++;
      emit(now, adv.id, "lu", Record{ { "identity", identity.to_string() } });
      hn_->location_update(identity, adv.id, now);
      return;
    }
    case AdversaryKind::rand_forger: {
      Block128 rand{};
      Block128 autn{};
      std::string mode = "random";
      const auto& seen = captured_[ue.name];
      const auto choice = seen.empty() ? 0 : rng.below(3);
      if (choice == 0) {
        rng.fill(rand);
        rng.fill(autn);
      } else {
        std::tie(rand, autn) = seen[rng.below(seen.size())];
        if (choice == 1) {
          mode = "bit-flip";
          auto& target = rng.chance(0.5) ? rand : autn;
          target[rng.below(16)] ^= static_cast<std::uint8_t>(1u << rng.below(8));
        } else {
          mode = "replay";
        }
      }
      counters_.forged_challenges++;
      emit(now,
           adv.id,
           "forged-challenge",
           Record{ { "to", ue.name }, { "mode", mode }, { "rand", to_hex(rand) }, { "autn", to_hex(autn) } });
      const auto answer = ue::answer_challenge(ue.usim, adv.id, crypto::Flavor::lte, rand, autn, now);
      emit(now,
           ue.name,
           "challenge-result",
           Record{ { "sn", adv.id }, { "verdict", std::string(aka::to_string(answer.verdict)) } });
      if (answer.accepted()) {
        counters_.forged_accepted++;
      }
      return;
    }
  }
}

// --- event loop ----------------------------------------------------------------

void
World::execute()
{
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  auto push = [&](SimTime t, EventKind kind, std::size_t index) { queue.push(Event{ t, seq++, kind, index }); };

  SimTime start = 1;
  if (scenario_.bootstrap_attach) {
    for (std::size_t i = 0; i < ues_.size(); i++) {
      push(static_cast<SimTime>(1 + i), EventKind::bootstrap, i);
    }
    start = static_cast<SimTime>(ues_.size() + 1);
  }
  std::size_t workload_left = scenario_.events;
  bool workload_pending = workload_left > 0 && start <= scenario_.duration;
  if (workload_pending) {
    push(start, EventKind::workload, 0);
  }
  for (std::size_t i = 0; i < scenario_.adversaries.size(); i++) {
    const auto& adv = scenario_.adversaries[i];
    if (adv.kind != AdversaryKind::passive_eavesdrop) {
      push(start + gap(adversary_rngs_[i], adv.interval), EventKind::adversary, i);
    }
  }
  for (std::size_t i = 0; i < scenario_.faults.size(); i++) {
    push(scenario_.faults[i].at, EventKind::fault, i);
  }

  while (!queue.empty()) {
    const auto ev = queue.top();
    queue.pop();
    if (ev.kind == EventKind::adversary && !workload_pending) {
      continue;
    }
    now_ = ev.t;
    events_++;

    switch (ev.kind) {
      case EventKind::bootstrap: {
        auto& ue = ues_[ev.index];
        auto id = choose_sn(ue, crypto::Flavor::lte);
        if (!id) {
          id = choose_sn(ue, crypto::Flavor::fiveg);
        }
        if (id) {
          attach(ue, *id, sn::Trigger::inquiry, now_);
        }
        break;
      }
      case EventKind::workload: {
        workload_left--;
        auto& ue = ues_[workload_rng_.below(ues_.size())];
        run_action(ue, pick_action(mix_of(ue), workload_rng_), now_);
        const auto next = now_ + gap(workload_rng_, scenario_.mean_interval);
        if (workload_left > 0 && next <= scenario_.duration) {
          push(next, EventKind::workload, 0);
        } else {
          workload_pending = false;
        }
        break;
      }
      case EventKind::adversary: {
        const auto& adv = scenario_.adversaries[ev.index];
        run_adversary(adv, adversary_rngs_[ev.index], now_);
        push(now_ + gap(adversary_rngs_[ev.index], adv.interval), EventKind::adversary, ev.index);
        break;
      }
      case EventKind::fault:
        inject_fault(scenario_.faults[ev.index], now_);
        break;
    }

    if (auto v = check(now_)) {
      v->event_index = events_ - 1;
      Record r;
      r["check"] = v->check;
      r["detail"] = v->detail;
      r["event_index"] = v->event_index;
      if (!v->ue.empty()) {
        r["ue"] = v->ue;
      }
      r["snapshot"] = v->snapshot;
      emit(now_, "sim", "violation", std::move(r));
      violation_ = std::move(v);
      break;
    }
    if (scenario_.sample_every > 0 && events_ % scenario_.sample_every == 0) {
      sample(now_);
    }
  }
  sample(now_);
}

// --- runs ----------------------------------------------------------------------

RunResult
run(const Scenario& scenario, std::uint64_t seed, const RunOptions& options)
{
  RunResult r;
  World world(scenario, seed, options.keep_trace ? &r.trace : nullptr);
  world.execute();
  r.run_id = world.run_id();
  r.scenario = scenario.name;
  r.seed = seed;
  r.events = world.events_processed();
  r.end_time = world.now();
  r.violation = world.violation();
  if (options.keep_trace) {
    r.allocation_log = world.hn().log().to_jsonl(r.run_id);
  }
  r.hn_stats = world.hn().stats();
  r.counters = world.counters();
  r.recoveries = world.recoveries();
  r.occupancy = world.occupancy();
  r.linkability = world.linkability();
  for (const auto& sub : world.hn().subscribers()) {
    r.max_phn = std::max(r.max_phn, sub.retired.size());
  }
  return r;
}

std::vector<RunResult>
run_campaign(const Scenario& scenario, const std::vector<std::uint64_t>& seeds, unsigned jobs, const RunOptions& options)
{
  std::vector<RunResult> results(seeds.size());
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= seeds.size()) {
        return;
      }
      try {
        results[i] = run(scenario, seeds[i], options);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        return;
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size()))));
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; j++) {
    threads.emplace_back(worker);
  }
  worker();
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
  return results;
}

std::string
RunResult::report_jsonl() const
{
  std::string out;
  auto line = [&](std::string_view kind, const Record& fields) {
    out += make_record(end_time, "report", kind, fields).dump();
    out += '\n';
  };

  line("summary",
       Record{ { "run_id", run_id },
               { "scenario", scenario },
               { "seed", seed },
               { "events", events },
               { "end_time", end_time },
               { "ok", ok() } });

  Record inv;
  inv["checked_events"] = events;
  if (violation) {
    inv["violation"] = Record{ { "check", violation->check },
                               { "detail", violation->detail },
                               { "event_index", violation->event_index },
                               { "t", violation->t },
                               { "ue", violation->ue } };
  } else {
    inv["violation"] = nullptr;
  }
  line("invariants", inv);

  line("rotations",
       Record{ { "total", hn_stats.rotations },
               { "lu", counters.rotations_lu },
               { "fiveg_confirm", counters.rotations_5g },
               { "allocations", hn_stats.allocations },
               { "pruned", hn_stats.pruned },
               { "cap_hits", hn_stats.cap_hits },
               { "ecf_set", hn_stats.ecf_set },
               { "max_phn", max_phn } });

  Record samples = Record::array();
  for (const auto& s : occupancy) {
    samples.push_back(
      Record{ { "t", s.t }, { "allocated", s.allocated }, { "occupancy", s.occupancy }, { "mean_phn", s.mean_phn } });
  }
  line("pool-occupancy", Record{ { "samples", std::move(samples) } });

  line("harvest", linkability.to_json());

  const auto akas = counters.lte_akas + counters.fiveg_akas;
  const auto per = [&](std::uint64_t n) { return akas ? static_cast<double>(n) / static_cast<double>(akas) : 0.0; };
  line("overhead",
       Record{ { "akas", akas },
               { "av_requests", hn_stats.av_requests },
               { "rand_encryptions", hn_stats.rand_encryptions },
               { "suci_decryptions", hn_stats.suci_decryptions },
               { "suci_mac_checks", hn_stats.suci_mac_checks },
               { "allocation_tries", hn_stats.allocation_tries },
               { "rand_encryptions_per_aka", per(hn_stats.rand_encryptions) },
               { "mac_checks_per_aka", per(hn_stats.suci_mac_checks) } });

  Record recs = Record::array();
  for (const auto& r : recoveries) {
    recs.push_back(Record{ { "ue", r.ue },
                           { "fault_at", r.fault_at },
                           { "corrupted_d2", r.corrupted_d2 },
                           { "hn_newest", r.hn_newest },
                           { "desync", r.desync },
                           { "lte_akas", r.lte_akas },
                           { "lte_updates", r.lte_updates },
                           { "fiveg_akas", r.fiveg_akas },
                           { "ecf", r.ecf_seen },
                           { "recovered", r.recovered },
                           { "recovered_at", r.recovered ? Record(r.recovered_at) : Record() } });
  }
  line("recovery", Record{ { "faults", std::move(recs) } });
  line("counters", counters.to_json());
  return out;
}

std::string
RunResult::summary() const
{
  char buf[256];
  std::string out;
  out += "scenario " + scenario + " seed " + std::to_string(seed) + " run " + run_id + "\n";
  std::snprintf(buf, sizeof buf, "events %zu, sim time %lld s\n", events, static_cast<long long>(end_time));
  out += buf;
  if (violation) {
    out += "INVARIANT VIOLATION at event " + std::to_string(violation->event_index) + " (t=" +
           std::to_string(violation->t) + "): " + violation->check + ": " + violation->detail + "\n";
  } else {
    out += "invariants: ok\n";
  }
  std::snprintf(buf,
                sizeof buf,
                "attaches %zu ok / %zu failed; AKAs lte %zu, 5g %zu (suci %zu)\n",
                counters.attaches,
                counters.attach_failures,
                counters.lte_akas,
                counters.fiveg_akas,
                counters.suci_akas);
  out += buf;
  std::snprintf(buf,
                sizeof buf,
                "rotations %llu (lu %zu, 5g %zu), allocations %llu, pruned %llu, cap hits %llu, max |P_HN| %zu\n",
                static_cast<unsigned long long>(hn_stats.rotations),
                counters.rotations_lu,
                counters.rotations_5g,
                static_cast<unsigned long long>(hn_stats.allocations),
                static_cast<unsigned long long>(hn_stats.pruned),
                static_cast<unsigned long long>(hn_stats.cap_hits),
                max_phn);
  out += buf;
  if (!occupancy.empty()) {
    std::snprintf(buf,
                  sizeof buf,
                  "pool: %zu values in use (occupancy %.4f)\n",
                  occupancy.back().allocated,
                  occupancy.back().occupancy);
    out += buf;
  }
  const auto& l = linkability;
  std::snprintf(buf,
                sizeof buf,
                "harvest: lte catcher %zu inquiries, %zu values, max/window %zu; 5g catcher %zu SUCIs, %zu repeats\n",
                l.lte_inquiries,
                l.lte_harvested,
                l.lte_max_window,
                l.suci_harvested,
                l.suci_duplicates);
  out += buf;
  if (counters.forged_challenges > 0) {
    out += "forged challenges: " + std::to_string(counters.forged_challenges) + ", accepted " +
           std::to_string(counters.forged_accepted) + "\n";
  }
  for (const auto& r : recoveries) {
    out += "fault " + r.ue + ": d2=" + std::to_string(r.corrupted_d2) + (r.recovered ? ", recovered after " : ", NOT recovered after ") +
           std::to_string(r.fiveg_akas) + " 5G AKA(s), " + std::to_string(r.lte_akas) + " LTE AKA(s) with " +
           std::to_string(r.lte_updates) + " update(s)\n";
  }
  return out;
}

// --- resynchronization drill -----------------------------------------------------

Record
DrillReport::to_json() const
{
  Record r;
  r["ok"] = ok;
  r["lte_akas_per_ue"] = lte_akas_per_ue;
  r["ecf_before_5g"] = ecf_before_5g;
  r["detail"] = detail;
  Record list = Record::array();
  for (const auto& u : ues) {
    list.push_back(Record{ { "ue", u.ue },
                           { "desync", u.desync },
                           { "lte_akas", u.lte_akas },
                           { "lte_updates", u.lte_updates },
                           { "fiveg_akas", u.fiveg_akas },
                           { "ecf", u.ecf_seen },
                           { "recovered", u.recovered } });
  }
  r["ues"] = std::move(list);
  return r;
}

DrillReport
run_resync_drill(World& world,
                 const std::vector<std::size_t>& targets,
                 std::optional<std::uint32_t> value,
                 std::uint32_t offset,
                 std::size_t lte_akas,
                 std::size_t max_5g)
{
  std::optional<std::string> lte;
  std::optional<std::string> fiveg;
  for (const auto& s : world.sns()) {
    auto& slot = s->config().flavor == crypto::Flavor::lte ? lte : fiveg;
    if (!slot) {
      slot = s->id();
    }
  }
  if (!lte || !fiveg) {
    throw ProtocolError(ErrorCode::config_error, "drill needs an LTE and a 5G serving network");
  }

  DrillReport out;
  out.lte_akas_per_ue = lte_akas;
  out.ok = true;
  SimTime t = world.now() + 1;
  auto note = [&](const std::string& what) {
    out.ok = false;
    if (out.detail.empty()) {
      out.detail = what;
    }
  };

  for (const auto target : targets) {
    auto& ue = world.ue(target);
    world.attach(ue, *lte, sn::Trigger::inquiry, t++);
    const auto idx = world.inject_fault(FaultSpec{ target, t, value, offset }, t);
    t++;

    for (std::size_t i = 0; i < lte_akas; i++) {
      const auto r = world.attach(ue, *lte, sn::Trigger::inquiry, t);
      if (r.payload && r.payload->ecf != 0) {
        out.ecf_before_5g++;
      }
      if (auto v = world.check(t)) {
        note(v->check + ": " + v->detail);
      }
      t++;
    }
    for (std::size_t i = 0; i < max_5g && ue.faulted; i++) {
      world.attach(ue, *fiveg, sn::Trigger::inquiry, t);
      if (auto v = world.check(t)) {
        note(v->check + ": " + v->detail);
      }
      t++;
    }

    const auto& rec = world.recoveries()[idx];
    out.ues.push_back(rec);
    if (rec.desync) {
      if (rec.lte_akas < lte_akas || rec.lte_updates != 0) {
        note(rec.ue + ": LTE AKAs delivered a pseudonym while desynchronized");
      }
      if (!rec.recovered || rec.fiveg_akas != 1 || !rec.ecf_seen) {
        note(rec.ue + ": not recovered by exactly one 5G AKA");
      }
    } else if (rec.ecf_seen) {
      note(rec.ue + ": ECF set although d2 did not pass d_f");
    }
  }
  if (out.ecf_before_5g > 0) {
    note("ECF observed on an LTE vector");
  }
  return out;
}

} // namespace pseudoaka::sim
