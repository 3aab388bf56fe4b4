#include "pseudoaka/hn.hpp"
#include "pseudoaka/error.hpp"

#include <algorithm>
#include <sstream>

namespace pseudoaka::hn {

// --- pool -------------------------------------------------------------------

static std::uint64_t
pow10(unsigned digits)
{
  std::uint64_t v = 1;
  for (unsigned i = 0; i < digits; i++) {
    v *= 10;
  }
  return v;
}

PseudonymPool::PseudonymPool(unsigned digits)
  : digits_(digits)
  , space_(pow10(digits))
{
  if (digits < 1 || digits > msin_digits) {
    throw ProtocolError(ErrorCode::config_error, "pool digits must be in [1, 10]");
  }
}

std::optional<SubscriberId>
PseudonymPool::owner(std::uint64_t value) const
{
  auto it = owners_.find(value);
  if (it == owners_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void
PseudonymPool::reserve(std::uint64_t value, SubscriberId owner)
{
  if (!in_space(value)) {
    throw ProtocolError(ErrorCode::invalid_argument, "value outside the pool range");
  }
  if (!owners_.emplace(value, owner).second) {
    throw ProtocolError(ErrorCode::invalid_argument, "value " + format_msin(value) + " already allocated");
  }
}

PseudonymPool::Allocation
PseudonymPool::allocate(SubscriberId owner, Rng& rng)
{
  if (owners_.size() >= space_) {
    throw ProtocolError(ErrorCode::pool_exhausted, "no free pseudonym values");
  }
  Allocation a;
  for (;;) {
    a.tries++;
    a.value = rng.below(space_);
    if (owners_.emplace(a.value, owner).second) {
      return a;
    }
  }
}

void
PseudonymPool::release(std::uint64_t value)
{
  owners_.erase(value);
}

// --- subscriber record ------------------------------------------------------

std::vector<PseudonymEntry>
SubscriberRecord::live_entries() const
{
  std::vector<PseudonymEntry> out{ current, next };
  if (future) {
    out.push_back(*future);
  }
  out.insert(out.end(), retired.begin(), retired.end());
  return out;
}

std::optional<PseudonymEntry>
SubscriberRecord::find_pseudonym(std::uint64_t value) const
{
  if (current.value == value) {
    return current;
  }
  if (next.value == value) {
    return next;
  }
  if (future && future->value == value) {
    return future;
  }
  for (const auto& e : retired) {
    if (e.value == value) {
      return e;
    }
  }
  return std::nullopt;
}

bool
SubscriberRecord::holds_pseudonym(std::uint64_t value) const
{
  return find_pseudonym(value).has_value();
}

// --- algorithms -------------------------------------------------------------

static u128
draw_salt(Rng& rng)
{
  const u128 hi = rng.next();
  const u128 lo = rng.next();
  return ((hi << 64) | lo) & salt_mask;
}

static void
allocate_future(SubscriberRecord& sub, PseudonymPool& pool, Rng& rng, RandConstruction& out)
{
  if (sub.ctr > counter_max) {
    throw ProtocolError(ErrorCode::counter_overflow, "pseudonym counter exhausted for " + sub.imsi.to_string());
  }
  const auto a = pool.allocate(sub.id, rng);
  sub.future = PseudonymEntry{ a.value, sub.ctr };
  sub.ctr++;
  out.allocation = a;
}

/// Shared by both RAND constructions: pick or allocate the pseudonym to
/// embed, honouring the cap.
static PseudonymEntry
select_embedded(SubscriberRecord& sub, PseudonymPool& pool, std::size_t cap, Rng& rng, RandConstruction& out)
{
  if (!sub.future && sub.retired.size() < cap) {
    allocate_future(sub, pool, rng, out);
  }
  if (sub.future) {
    return *sub.future;
  }
  out.cap_reached = true;
  return sub.next;
}

static void
seal(const SubscriberRecord& sub, const PseudonymEntry& embedded, std::uint8_t ecf, Rng& rng, RandConstruction& out)
{
  out.payload = RandPayload{ embedded.value, embedded.counter, ecf, draw_salt(rng) };
  out.rand = crypto::encrypt_rand(sub.kappa, encode_rand_payload(out.payload));
}

RandConstruction
construct_rand_lte(SubscriberRecord& sub, PseudonymPool& pool, std::size_t cap, Rng& rng)
{
  RandConstruction out;
  const auto embedded = select_embedded(sub, pool, cap, rng, out);
  seal(sub, embedded, 0, rng, out);
  return out;
}

static std::optional<PseudonymEntry>
rotate(SubscriberRecord& sub)
{
  if (!sub.future) {
    return std::nullopt;
  }
  const auto retired = sub.current;
  sub.retired.push_back(retired);
  sub.current = sub.next;
  sub.next = *sub.future;
  sub.future.reset();
  return retired;
}

std::optional<PseudonymEntry>
handle_lu(SubscriberRecord& sub, std::uint64_t q)
{
  const bool matches = q == sub.next.value || (sub.future && q == sub.future->value);
  if (!matches) {
    return std::nullopt;
  }
  return rotate(sub);
}

bool
verify_suci_tag(const SubscriberRecord& sub, const SuciPlaintext& opened)
{
  if (opened.msin != sub.imsi.msin()) {
    return false;
  }
  const auto expected = crypto::mac(sub.k, suci_mac_input(opened.msin, opened.delta_min, opened.delta_max));
  Bytes a;
  Bytes b;
  put_uint(a, expected, 8);
  put_uint(b, opened.tag, 8);
  return constant_time_equal(a, b);
}

RandConstruction
construct_rand_5g(SubscriberRecord& sub, const SuciPlaintext& opened, PseudonymPool& pool, std::size_t cap, Rng& rng)
{
  if (!verify_suci_tag(sub, opened)) {
    throw ProtocolError(ErrorCode::mac_failure, "SUCI tag does not verify");
  }
  RandConstruction out;
  const auto embedded = select_embedded(sub, pool, cap, rng, out);
  const std::uint8_t ecf = opened.delta_max > embedded.counter ? 1 : 0;
  seal(sub, embedded, ecf, rng, out);
  return out;
}

std::vector<PseudonymEntry>
prune_phn(SubscriberRecord& sub, std::uint32_t delta_min, PseudonymPool& pool)
{
  std::vector<PseudonymEntry> removed;
  std::erase_if(sub.retired, [&](const PseudonymEntry& e) {
    if (e.counter < delta_min) {
      removed.push_back(e);
      return true;
    }
    return false;
  });
  for (const auto& e : removed) {
    pool.release(e.value);
  }
  return removed;
}

std::optional<PseudonymEntry>
confirm_5g_success(SubscriberRecord& sub, const PseudonymEntry& embedded, bool suci_initiated)
{
  if (!suci_initiated || !sub.future || sub.future->value != embedded.value) {
    return std::nullopt;
  }
  return rotate(sub);
}

// --- allocation log ---------------------------------------------------------

AllocationLogEntry*
AllocationLog::live_entry(std::uint64_t pseudonym)
{
  auto it = by_value_.find(pseudonym);
  if (it == by_value_.end()) {
    return nullptr;
  }
  for (auto idx = it->second.rbegin(); idx != it->second.rend(); ++idx) {
    auto& e = entries_[*idx];
    if (!e.t_released) {
      return &e;
    }
  }
  return nullptr;
}

void
AllocationLog::open(std::uint64_t pseudonym, const Imsi& imsi, SimTime t)
{
  by_value_[pseudonym].push_back(entries_.size());
  entries_.push_back(AllocationLogEntry{ pseudonym, imsi, t, std::nullopt, std::nullopt, {} });
}

void
AllocationLog::note_sn(std::uint64_t pseudonym, const std::string& sn_id)
{
  if (auto* e = live_entry(pseudonym)) {
    if (std::find(e->sns_used.begin(), e->sns_used.end(), sn_id) == e->sns_used.end()) {
      e->sns_used.push_back(sn_id);
    }
  }
}

void
AllocationLog::note_first_aka(std::uint64_t pseudonym, SimTime t)
{
  if (auto* e = live_entry(pseudonym); e && !e->t_first_aka) {
    e->t_first_aka = t;
  }
}

void
AllocationLog::release(std::uint64_t pseudonym, SimTime t)
{
  if (auto* e = live_entry(pseudonym)) {
    e->t_released = t;
  }
}

static bool
held_at(const AllocationLogEntry& e, SimTime t)
{
  return e.t_alloc <= t && (!e.t_released || t < *e.t_released);
}

static bool
used_at_sn(const AllocationLogEntry& e, const std::string& sn_id)
{
  return std::find(e.sns_used.begin(), e.sns_used.end(), sn_id) != e.sns_used.end();
}

Imsi
AllocationLog::resolve(const Cdr& cdr, SimTime grace) const
{
  if (subscribers_.contains(cdr.identity)) {
    return cdr.identity;
  }
  auto it = by_value_.find(cdr.identity.msin());
  if (it == by_value_.end()) {
    throw ProtocolError(ErrorCode::unresolvable_cdr, "no allocation of " + cdr.identity.to_string());
  }
  const auto& candidates = it->second;

  using Tier = bool (*)(const AllocationLogEntry&, const Cdr&, SimTime);
  const Tier tiers[] = {
    [](const AllocationLogEntry& e, const Cdr& c, SimTime) { return used_at_sn(e, c.sn_id) && held_at(e, c.t_event); },
    [](const AllocationLogEntry& e, const Cdr& c, SimTime g) {
      return used_at_sn(e, c.sn_id) && e.t_released && *e.t_released <= c.t_event && c.t_event < *e.t_released + g;
    },
    [](const AllocationLogEntry& e, const Cdr& c, SimTime) { return held_at(e, c.t_event); },
  };
  for (auto tier : tiers) {
    for (auto idx = candidates.rbegin(); idx != candidates.rend(); ++idx) {
      const auto& e = entries_[*idx];
      if (tier(e, cdr, grace)) {
        return e.imsi;
      }
    }
  }
  throw ProtocolError(ErrorCode::unresolvable_cdr,
                      "no holder of " + cdr.identity.to_string() + " at t=" + std::to_string(cdr.t_event));
}

std::optional<Imsi>
AllocationLog::resolve_by_interval(const Cdr& cdr) const
{
  if (subscribers_.contains(cdr.identity)) {
    return cdr.identity;
  }
  auto it = by_value_.find(cdr.identity.msin());
  if (it == by_value_.end()) {
    return std::nullopt;
  }
  for (auto idx = it->second.rbegin(); idx != it->second.rend(); ++idx) {
    const auto& e = entries_[*idx];
    if (held_at(e, cdr.t_event)) {
      return e.imsi;
    }
  }
  return std::nullopt;
}

static nlohmann::ordered_json
optional_time(const std::optional<SimTime>& t)
{
  return t ? nlohmann::ordered_json(*t) : nlohmann::ordered_json(nullptr);
}

std::string
AllocationLog::to_jsonl(const std::string& run_id) const
{
  std::ostringstream out;
  nlohmann::ordered_json header;
  header["record"] = "header";
  header["run_id"] = run_id;
  auto& subs = header["subscribers"] = nlohmann::ordered_json::array();
  for (const auto& imsi : subscribers_) {
    subs.push_back(imsi.to_string());
  }
  out << header.dump() << '\n';
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["record"] = "allocation";
    j["pseudonym"] = format_msin(e.pseudonym);
    j["imsi"] = e.imsi.to_string();
    j["t_alloc"] = e.t_alloc;
    j["t_first_aka"] = optional_time(e.t_first_aka);
    j["t_released"] = optional_time(e.t_released);
    j["sns_used"] = e.sns_used;
    out << j.dump() << '\n';
  }
  return out.str();
}

static std::optional<SimTime>
read_time(const nlohmann::json& j)
{
  if (j.is_null()) {
    return std::nullopt;
  }
  return j.get<SimTime>();
}

AllocationLog
AllocationLog::from_jsonl(std::string_view text, std::string* run_id)
{
  AllocationLog log;
  bool seen_header = false;
  try {
    for (const auto& rec : parse_jsonl(text)) {
      const auto kind = rec.at("record").get<std::string>();
      if (kind == "header") {
        seen_header = true;
        if (run_id) {
          *run_id = rec.at("run_id").get<std::string>();
        }
        for (const auto& imsi : rec.at("subscribers")) {
          log.add_subscriber(Imsi::parse(imsi.get<std::string>()));
        }
      } else if (kind == "allocation") {
        const auto value = std::stoull(rec.at("pseudonym").get<std::string>());
        log.open(value, Imsi::parse(rec.at("imsi").get<std::string>()), rec.at("t_alloc").get<SimTime>());
        auto& e = log.entries_.back();
        e.t_first_aka = read_time(rec.at("t_first_aka"));
        e.t_released = read_time(rec.at("t_released"));
        e.sns_used = rec.at("sns_used").get<std::vector<std::string>>();
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(ErrorCode::config_error, std::string("allocation log: ") + ex.what());
  }
  if (!seen_header) {
    throw ProtocolError(ErrorCode::config_error, "allocation log has no header record");
  }
  return log;
}

// --- provisioning file ------------------------------------------------------

std::string
to_json_text(const ProvisioningFile& file)
{
  nlohmann::ordered_json j;
  j["mcc"] = file.network.mcc;
  j["mnc"] = file.network.mnc;
  j["pool_digits"] = file.pool_digits;
  j["cap"] = file.cap;
  j["hnpki"] = file.hnpki;
  if (file.keys) {
    j["hn_public_key"] = to_hex(file.keys->public_key);
    j["hn_private_key"] = to_hex(file.keys->private_key);
  }
  auto& subs = j["subscribers"] = nlohmann::ordered_json::array();
  for (const auto& s : file.subscribers) {
    nlohmann::ordered_json e;
    e["imsi"] = s.imsi.to_string();
    e["k"] = to_hex(s.k.bytes);
    e["p1"] = format_msin(s.p1.value);
    e["d1"] = s.p1.counter;
    e["p2"] = format_msin(s.p2.value);
    e["d2"] = s.p2.counter;
    subs.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

ProvisioningFile
parse_provisioning(std::string_view text)
{
  ProvisioningFile file;
  try {
    const auto j = nlohmann::json::parse(text);
    file.network = NetworkId{ j.at("mcc").get<std::string>(), j.at("mnc").get<std::string>() };
    file.network.validate();
    file.pool_digits = j.value("pool_digits", 4u);
    file.cap = j.value("cap", std::size_t{ 10 });
    file.hnpki = j.value("hnpki", std::uint8_t{ 1 });
    if (j.contains("hn_private_key")) {
      crypto::HnKeyPair keys;
      keys.private_key = array_from_hex<32>(j.at("hn_private_key").get<std::string>());
      keys.public_key = crypto::x25519_public_from_private(keys.private_key);
      file.keys = keys;
    }
    for (const auto& e : j.at("subscribers")) {
      Provisioned p;
      p.imsi = Imsi::parse(e.at("imsi").get<std::string>());
      p.k.bytes = array_from_hex<16>(e.at("k").get<std::string>());
      p.p1 = PseudonymEntry{ std::stoull(e.at("p1").get<std::string>()), e.value("d1", 1u) };
      p.p2 = PseudonymEntry{ std::stoull(e.at("p2").get<std::string>()), e.value("d2", 2u) };
      file.subscribers.push_back(p);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ProtocolError(ErrorCode::config_error, std::string("provisioning file: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ProtocolError(ErrorCode::config_error, std::string("provisioning file: ") + ex.what());
  }
  return file;
}

// --- home network -----------------------------------------------------------

HomeNetwork::HomeNetwork(HnConfig config, crypto::HnKeyPair keys, Rng rng, TraceSink* trace)
  : config_(std::move(config))
  , keys_(keys)
  , registry_(crypto::SuiteRegistry::with_defaults(config_.hnpki))
  , rng_(rng)
  , trace_(trace)
  , pool_(config_.pool_digits)
{
  config_.network.validate();
}

void
HomeNetwork::emit(SimTime t, std::string_view kind, Record fields)
{
  if (trace_) {
    trace_->emit(t, "hn", kind, std::move(fields));
  }
}

Provisioned
HomeNetwork::provision(const Imsi& imsi,
                       const crypto::MasterKey& k,
                       std::optional<std::pair<std::uint64_t, std::uint64_t>> initial,
                       SimTime now)
{
  if (!(imsi.network() == config_.network)) {
    throw ProtocolError(ErrorCode::config_error, "IMSI " + imsi.to_string() + " belongs to another network");
  }
  if (imsi_index_.contains(imsi.msin())) {
    throw ProtocolError(ErrorCode::config_error, "duplicate IMSI " + imsi.to_string());
  }
  const auto id = static_cast<SubscriberId>(subscribers_.size());
  if (pool_.in_space(imsi.msin())) {
    pool_.reserve(imsi.msin(), id);
  }

  SubscriberRecord sub;
  sub.id = id;
  sub.imsi = imsi;
  sub.k = k;
  sub.kappa = crypto::derive_pseudonym_key(k);
  if (initial) {
    pool_.reserve(initial->first, id);
    pool_.reserve(initial->second, id);
    sub.current = PseudonymEntry{ initial->first, 1 };
    sub.next = PseudonymEntry{ initial->second, 2 };
  } else {
    sub.current = PseudonymEntry{ pool_.allocate(id, rng_).value, 1 };
    sub.next = PseudonymEntry{ pool_.allocate(id, rng_).value, 2 };
  }
  sub.ctr = 3;

  log_.add_subscriber(imsi);
  log_.open(sub.current.value, imsi, now);
  log_.open(sub.next.value, imsi, now);
  imsi_index_.emplace(imsi.msin(), id);
  subscribers_.push_back(sub);

  return Provisioned{ imsi, k, sub.current, sub.next };
}

std::optional<SubscriberId>
HomeNetwork::find_by_imsi(const Imsi& imsi) const
{
  if (!(imsi.network() == config_.network)) {
    return std::nullopt;
  }
  auto it = imsi_index_.find(imsi.msin());
  if (it == imsi_index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

SubscriberId
HomeNetwork::lookup_identity(const Imsi& q) const
{
  if (auto id = find_by_imsi(q)) {
    return *id;
  }
  if (q.network() == config_.network && pool_.in_space(q.msin())) {
    if (auto owner = pool_.owner(q.msin()); owner && subscribers_[*owner].holds_pseudonym(q.msin())) {
      return *owner;
    }
  }
  throw ProtocolError(ErrorCode::unknown_subscriber, "no subscriber holds " + q.to_string());
}

void
HomeNetwork::reject(std::string_view why, const std::string& detail, SimTime now)
{
  stats_.rejected_requests++;
  Record r;
  r["reason"] = std::string(why);
  r["detail"] = detail;
  emit(now, "av-rejected", std::move(r));
}

void
HomeNetwork::record_allocation(const SubscriberRecord& sub, const RandConstruction& rc, SimTime now)
{
  stats_.rand_encryptions++;
  if (rc.cap_reached) {
    stats_.cap_hits++;
  }
  if (!rc.allocation) {
    return;
  }
  stats_.allocations++;
  stats_.allocation_tries += rc.allocation->tries;
  log_.open(rc.allocation->value, sub.imsi, now);
  Record r;
  r["imsi"] = sub.imsi.to_string();
  r["pseudonym"] = format_msin(rc.allocation->value);
  r["d"] = sub.future->counter;
  r["tries"] = rc.allocation->tries;
  emit(now, "pseudonym-allocated", std::move(r));
}

void
HomeNetwork::record_rotation(const SubscriberRecord& sub, const PseudonymEntry& retired, std::string_view cause, SimTime now)
{
  stats_.rotations++;
  Record r;
  r["imsi"] = sub.imsi.to_string();
  r["cause"] = std::string(cause);
  r["retired"] = format_msin(retired.value);
  r["d_c"] = sub.current.counter;
  r["d_n"] = sub.next.counter;
  r["p_hn"] = sub.retired.size();
  emit(now, "rotation", std::move(r));
}

RandConstruction
HomeNetwork::construct_lte_logged(SubscriberRecord& sub, SimTime now)
{
  auto rc = construct_rand_lte(sub, pool_, config_.cap, rng_);
  record_allocation(sub, rc, now);
  return rc;
}

std::vector<aka::AuthVector>
HomeNetwork::request_av_lte(const AvRequest& request, SimTime now)
{
  stats_.av_requests++;
  if (request.count < 1 || request.count > 8) {
    reject("invalid-argument", "batch size " + std::to_string(request.count), now);
    throw ProtocolError(ErrorCode::invalid_argument, "batch size must be in [1, 8]");
  }
  SubscriberId id = 0;
  try {
    id = lookup_identity(request.identity);
  } catch (const ProtocolError& e) {
    reject(to_string(e.code()), request.identity.to_string(), now);
    throw;
  }
  auto& sub = subscribers_[id];

  std::vector<aka::AuthVector> out;
  for (std::size_t i = 0; i < request.count; i++) {
    const auto rc = construct_lte_logged(sub, now);
    auto built = aka::build_av(sub.k, sub.imsi.msin(), sub.sqn, rc.rand, aka::Flavor::lte, request.context);
    Record r;
    r["sn"] = request.context.serving_network;
    r["flavor"] = "lte";
    r["identity"] = request.identity.to_string();
    r["embedded_d"] = rc.payload.counter;
    r["ecf"] = rc.payload.ecf;
    r["at_cap"] = rc.cap_reached;
    r["msin_in_av"] = built.av.msin.has_value();
    emit(now, "av-issued", std::move(r));
    out.push_back(std::move(built.av));
  }
  return out;
}

bool
HomeNetwork::location_update(const Imsi& q, const std::string& sn_id, SimTime now)
{
  stats_.lu_received++;
  Record r;
  r["sn"] = sn_id;
  r["identity"] = q.to_string();

  std::optional<SubscriberId> id;
  try {
    id = lookup_identity(q);
  } catch (const ProtocolError&) {
  }
  std::optional<PseudonymEntry> retired;
  if (id) {
    auto& sub = subscribers_[*id];
    if (!(q == sub.imsi)) {
      log_.note_sn(q.msin(), sn_id);
      log_.note_first_aka(q.msin(), now);
      retired = handle_lu(sub, q.msin());
    }
  }
  r["outcome"] = retired ? "rotated" : (id ? "no-change" : "unknown");
  if (!retired) {
    stats_.lu_ignored++;
  }
  emit(now, "lu", std::move(r));
  if (retired) {
    record_rotation(subscribers_[*id], *retired, "lu", now);
  }
  return retired.has_value();
}

FiveGAv
HomeNetwork::finish_5g(SubscriberRecord& sub,
                       const RandConstruction& rc,
                       const aka::AvRequestContext& context,
                       bool suci_initiated,
                       SimTime now)
{
  auto built = aka::build_av(sub.k, sub.imsi.msin(), sub.sqn, rc.rand, aka::Flavor::fiveg, context);
  // The SUPI always reaches a 5G serving network with the vector.
  built.av.msin = sub.imsi.msin();
  if (rc.payload.ecf) {
    stats_.ecf_set++;
  }

  const auto ctx = next_context_++;
  pending_[ctx] = Pending5g{ sub.id,
                             *built.xres_star,
                             PseudonymEntry{ rc.payload.pseudonym, rc.payload.counter },
                             suci_initiated,
                             context.serving_network };
  while (pending_.size() > max_pending_5g) {
    pending_.erase(pending_.begin());
  }

  Record r;
  r["sn"] = context.serving_network;
  r["flavor"] = "5g";
  r["identity"] = suci_initiated ? "suci" : "supi";
  r["embedded_d"] = rc.payload.counter;
  r["ecf"] = rc.payload.ecf;
  r["at_cap"] = rc.cap_reached;
  r["context"] = ctx;
  emit(now, "av-issued", std::move(r));
  return FiveGAv{ std::move(built.av), ctx };
}

FiveGAv
HomeNetwork::request_av_5g_suci(ByteView suci_bytes, const aka::AvRequestContext& context, SimTime now)
{
  stats_.av_requests++;
  try {
    const auto suci = decode_suci(suci_bytes);
    if (!(suci.hnid == config_.network)) {
      throw ProtocolError(ErrorCode::unknown_subscriber, "SUCI routed to foreign network " + suci.hnid.to_string());
    }

    if (suci.supipsi == static_cast<std::uint8_t>(ProtectionScheme::null_scheme)) {
      const Imsi imsi(config_.network, decode_msin_bcd(suci.ciphertext));
      const auto id = find_by_imsi(imsi);
      if (!id) {
        throw ProtocolError(ErrorCode::unknown_subscriber, "no subscriber " + imsi.to_string());
      }
      auto& sub = subscribers_[*id];
      const auto rc = construct_lte_logged(sub, now);
      return finish_5g(sub, rc, context, true, now);
    }

    const auto& scheme = registry_.find(suci.hnpki, suci.supipsi);
    stats_.suci_decryptions++;
    const auto opened = decode_suci_plaintext(scheme.decrypt(keys_.private_key, suci.ciphertext));
    const Imsi imsi(config_.network, opened.msin);
    const auto id = find_by_imsi(imsi);
    if (!id) {
      throw ProtocolError(ErrorCode::unknown_subscriber, "no subscriber " + imsi.to_string());
    }
    auto& sub = subscribers_[*id];
    stats_.suci_mac_checks++;
    if (!verify_suci_tag(sub, opened)) {
      throw ProtocolError(ErrorCode::mac_failure, "SUCI tag does not verify");
    }

    const auto removed = prune_phn(sub, opened.delta_min, pool_);
    for (const auto& e : removed) {
      log_.release(e.value, now);
    }
    if (!removed.empty()) {
      stats_.pruned += removed.size();
      Record r;
      r["imsi"] = sub.imsi.to_string();
      r["delta_min"] = opened.delta_min;
      r["removed"] = removed.size();
      emit(now, "prune", std::move(r));
    }

    auto rc = construct_rand_5g(sub, opened, pool_, config_.cap, rng_);
    record_allocation(sub, rc, now);
    return finish_5g(sub, rc, context, true, now);
  } catch (const ProtocolError& e) {
    reject(to_string(e.code()), e.what(), now);
    throw;
  }
}

FiveGAv
HomeNetwork::request_av_5g_imsi(const Imsi& imsi, const aka::AvRequestContext& context, SimTime now)
{
  stats_.av_requests++;
  const auto id = find_by_imsi(imsi);
  if (!id) {
    reject("unknown-subscriber", imsi.to_string(), now);
    throw ProtocolError(ErrorCode::unknown_subscriber, "no subscriber " + imsi.to_string());
  }
  auto& sub = subscribers_[*id];
  const auto rc = construct_lte_logged(sub, now);
  return finish_5g(sub, rc, context, false, now);
}

bool
HomeNetwork::confirm_5g(std::uint64_t context_id, const crypto::ResStar& res_star, SimTime now)
{
  auto it = pending_.find(context_id);
  if (it == pending_.end()) {
    return false;
  }
  const auto pending = it->second;
  pending_.erase(it);

  auto& sub = subscribers_[pending.subscriber];
  const bool ok = aka::hn_check_response_5g(pending.xres_star, res_star);
  std::optional<PseudonymEntry> retired;
  if (ok) {
    retired = confirm_5g_success(sub, pending.embedded, pending.suci_initiated);
  }

  Record r;
  r["sn"] = pending.sn_id;
  r["context"] = context_id;
  r["match"] = ok;
  r["rotated"] = retired.has_value();
  emit(now, "5g-confirm", std::move(r));
  if (retired) {
    record_rotation(sub, *retired, "5g", now);
  }
  return ok;
}

} // namespace pseudoaka::hn
