#include "pseudoaka/sn.hpp"
#include "pseudoaka/error.hpp"

namespace pseudoaka::sn {

namespace {

constexpr std::string_view security_mode_label = "security-mode";

bool
keys_confirm(const Key256& network_key, const Key256& ue_key)
{
  return constant_time_equal(crypto::key_confirmation(network_key, security_mode_label),
                             crypto::key_confirmation(ue_key, security_mode_label));
}

Record
slots_record(const ue::UsimState& usim, const std::string& sn_id, ue::UpdateKind kind)
{
  Record r;
  r["sn"] = sn_id;
  r["update"] = std::string(ue::to_string(kind));
  r["p1"] = format_msin(usim.slot1.value);
  r["d1"] = usim.slot1.counter;
  r["p2"] = format_msin(usim.slot2.value);
  r["d2"] = usim.slot2.counter;
  return r;
}

} // namespace

std::string_view
to_string(Trigger t)
{
  switch (t) {
    case Trigger::inquiry:
      return "inquiry";
    case Trigger::guti:
      return "guti";
    case Trigger::paging:
      return "paging";
  }
  return "?";
}

ServingNetwork::ServingNetwork(SnConfig config, hn::HomeNetwork& hn, Rng rng, TraceSink* trace)
  : config_(std::move(config))
  , hn_(hn)
  , rng_(rng)
  , trace_(trace)
{
  if (config_.batch_size < 1 || config_.batch_size > max_batch) {
    throw ProtocolError(ErrorCode::config_error, "batch size must be in [1, 8] for " + config_.id);
  }
}

void
ServingNetwork::emit(SimTime t, std::string_view kind, Record fields)
{
  if (trace_) {
    trace_->emit(t, config_.id, kind, std::move(fields));
  }
}

void
ServingNetwork::emit_ue(const UeLink& ue, SimTime t, std::string_view kind, Record fields)
{
  if (trace_) {
    trace_->emit(t, ue.name, kind, std::move(fields));
  }
}

aka::AvRequestContext
ServingNetwork::request_context() const
{
  return aka::AvRequestContext{ config_.id, config_.li_patched, config_.li_key_binding };
}

void
ServingNetwork::note_av(const aka::AuthVector& av, SimTime now)
{
  Record r;
  r["flavor"] = std::string(crypto::to_string(av.flavor));
  r["msin_present"] = av.msin.has_value();
  emit(now, "av-received", std::move(r));
  if (config_.li_patched && av.msin) {
    li_log_.push_back(*av.msin);
    Record li;
    li["msin"] = format_msin(*av.msin);
    emit(now, "li-identity", std::move(li));
  }
}

void
ServingNetwork::flush_cache(const Imsi& identity)
{
  av_cache_.erase(identity);
}

std::size_t
ServingNetwork::cached_avs(const Imsi& identity) const
{
  auto it = av_cache_.find(identity);
  return it == av_cache_.end() ? 0 : it->second.size();
}

ServingNetwork::Fetch
ServingNetwork::next_lte_av(const Imsi& identity, SimTime now)
{
  auto& queue = av_cache_[identity];
  if (queue.empty()) {
    Record r;
    r["identity"] = identity.to_string();
    r["count"] = config_.batch_size;
    emit(now, "av-request", std::move(r));
    try {
      for (auto& av : hn_.request_av_lte(hn::AvRequest{ identity, request_context(), config_.batch_size }, now)) {
        note_av(av, now);
        queue.push_back(std::move(av));
      }
    } catch (const ProtocolError& e) {
      av_cache_.erase(identity);
      return Fetch{ std::nullopt, std::string(to_string(e.code())) };
    }
  }
  Fetch f{ std::move(queue.front()), {} };
  queue.pop_front();
  return f;
}

std::size_t
ServingNetwork::batch_fetch(const Imsi& identity, std::size_t n, SimTime now)
{
  if (n < 1 || n > max_batch) {
    throw ProtocolError(ErrorCode::invalid_argument, "batch size must be in [1, 8]");
  }
  Record r;
  r["identity"] = identity.to_string();
  r["count"] = n;
  emit(now, "av-request", std::move(r));
  try {
    auto avs = hn_.request_av_lte(hn::AvRequest{ identity, request_context(), n }, now);
    auto& queue = av_cache_[identity];
    for (auto& av : avs) {
      note_av(av, now);
      queue.push_back(std::move(av));
    }
    return avs.size();
  } catch (const ProtocolError&) {
    return 0;
  }
}

void
ServingNetwork::expire_gutis(SimTime now)
{
  std::erase_if(gutis_, [&](const auto& kv) {
    if (now - kv.second.issued_at < config_.guti_lifetime) {
      return false;
    }
    auto it = by_identity_.find(kv.second.identity);
    if (it != by_identity_.end() && it->second == kv.first) {
      by_identity_.erase(it);
    }
    return true;
  });
}

std::optional<Imsi>
ServingNetwork::resolve_guti(std::uint32_t guti, SimTime now)
{
  expire_gutis(now);
  auto it = gutis_.find(guti);
  if (it == gutis_.end()) {
    return std::nullopt;
  }
  return it->second.identity;
}

std::uint32_t
ServingNetwork::issue_guti(const ue::UsimState& usim, GutiEntry entry)
{
  // The attach request names the UE's previous GUTI here, which is retired.
  if (auto old = usim.guti_contexts.find(config_.id); old != usim.guti_contexts.end()) {
    if (auto it = gutis_.find(old->second.guti); it != gutis_.end()) {
      if (!(it->second.identity == entry.identity)) {
        flush_cache(it->second.identity);
      }
      auto idx = by_identity_.find(it->second.identity);
      if (idx != by_identity_.end() && idx->second == it->first) {
        by_identity_.erase(idx);
      }
      gutis_.erase(it);
    }
  }
  if (auto prev = by_identity_.find(entry.identity); prev != by_identity_.end()) {
    gutis_.erase(prev->second);
  }

  std::uint32_t guti = 0;
  do {
    guti = static_cast<std::uint32_t>(rng_.next());
  } while (guti == 0 || gutis_.contains(guti));
  by_identity_[entry.identity] = guti;
  gutis_.emplace(guti, std::move(entry));
  return guti;
}

void
ServingNetwork::fail(const UeLink& ue, AttachOutcome& out, std::string reason, SimTime now)
{
  out.success = false;
  out.reason = std::move(reason);
  Record r;
  r["to"] = ue.name;
  r["reason"] = out.reason;
  emit(now, "attach-failed", std::move(r));
}

AttachOutcome
ServingNetwork::attach(const UeLink& ue, SimTime now, Trigger trigger)
{
  return config_.flavor == Flavor::lte ? attach_lte(ue, now, trigger) : attach_5g(ue, now, trigger);
}

AttachOutcome
ServingNetwork::attach_lte(const UeLink& ue, SimTime now, Trigger trigger)
{
  auto& usim = *ue.usim;
  AttachOutcome out;
  expire_gutis(now);

  std::optional<Imsi> q;
  bool presented = false;
  if (trigger != Trigger::inquiry) {
    if (auto ctx = usim.guti_contexts.find(config_.id); ctx != usim.guti_contexts.end()) {
      Record r;
      r["sn"] = config_.id;
      r["type"] = "guti";
      r["value"] = ctx->second.guti;
      emit_ue(ue, now, "identity-response", std::move(r));
      q = resolve_guti(ctx->second.guti, now);
      if (!q) {
        Record rej;
        rej["to"] = ue.name;
        rej["guti"] = ctx->second.guti;
        emit(now, "guti-unknown", std::move(rej));
      }
    }
  }
  if (!q) {
    Record req;
    req["to"] = ue.name;
    emit(now, "identity-request", std::move(req));
    q = ue::respond_identity_lte(usim, config_.id);
    presented = true;
    Record r;
    r["sn"] = config_.id;
    r["type"] = "pseudonym";
    r["value"] = q->to_string();
    emit_ue(ue, now, "identity-response", std::move(r));
  }

  std::optional<aka::AuthVector> av;
  ue::ChallengeAnswer answer;
  for (int attempt = 0; attempt < 2; attempt++) {
    auto fetched = next_lte_av(*q, now);
    if (!fetched.av) {
      fail(ue, out, fetched.error, now);
      return out;
    }
    av = std::move(fetched.av);

    Record ch;
    ch["to"] = ue.name;
    ch["rand"] = to_hex(av->rand);
    ch["autn"] = to_hex(av->autn);
    emit(now, "challenge", std::move(ch));

    answer = ue::answer_challenge(usim, config_.id, Flavor::lte, av->rand, av->autn, now);
    out.challenges++;
    Record res;
    res["sn"] = config_.id;
    res["verdict"] = std::string(aka::to_string(answer.verdict));
    emit_ue(ue, now, "challenge-result", std::move(res));
    if (answer.accepted()) {
      break;
    }
    // Stale cached vectors: drop them and ask the home network again.
    flush_cache(*q);
    if (attempt == 1) {
      fail(ue, out, std::string(aka::to_string(answer.verdict)), now);
      return out;
    }
  }

  out.update = answer.update;
  out.payload = answer.payload;
  if (answer.update != ue::UpdateKind::none) {
    emit_ue(ue, now, "pseudonym-update", slots_record(usim, config_.id, answer.update));
  }

  const bool res_ok = aka::sn_check_response_lte(*av, answer.res);
  Record rc;
  rc["to"] = ue.name;
  rc["match"] = res_ok;
  emit(now, "res-check", std::move(rc));
  if (!res_ok) {
    fail(ue, out, "res-mismatch", now);
    return out;
  }
  if (!keys_confirm(av->anchor_key, answer.session_key)) {
    fail(ue, out, "key-mismatch", now);
    return out;
  }

  // An attach on a presented identity registers it afresh even when a
  // context for the same value survives from an earlier holder.
  if (presented || !by_identity_.contains(*q)) {
    const auto rotations = hn_.stats().rotations;
    Record lu;
    lu["identity"] = q->to_string();
    emit(now, "lu", std::move(lu));
    hn_.location_update(*q, config_.id, now);
    out.lu_sent = true;
    out.rotated = hn_.stats().rotations > rotations;
  }

  GutiEntry entry;
  entry.identity = *q;
  entry.cdr_identity = (config_.li_patched && av->msin) ? Imsi(q->network(), *av->msin) : *q;
  entry.session_key = av->anchor_key;
  entry.issued_at = now;
  entry.last_used = now;
  const auto guti = issue_guti(usim, std::move(entry));
  ue::complete_attach(usim, config_.id, ue::GutiContext{ guti, Flavor::lte, q->msin(), answer.session_key, now });

  out.success = true;
  out.guti = guti;
  Record done;
  done["to"] = ue.name;
  done["guti"] = guti;
  done["lu"] = out.lu_sent;
  emit(now, "attach-complete", std::move(done));
  return out;
}

AttachOutcome
ServingNetwork::attach_5g(const UeLink& ue, SimTime now, Trigger trigger, bool tamper_res_star)
{
  auto& usim = *ue.usim;
  AttachOutcome out;
  expire_gutis(now);
  const auto ctx = request_context();

  std::optional<Imsi> supi;
  if (trigger != Trigger::inquiry) {
    if (auto g = usim.guti_contexts.find(config_.id); g != usim.guti_contexts.end()) {
      Record r;
      r["sn"] = config_.id;
      r["type"] = "guti";
      r["value"] = g->second.guti;
      emit_ue(ue, now, "identity-response", std::move(r));
      supi = resolve_guti(g->second.guti, now);
      if (!supi) {
        Record rej;
        rej["to"] = ue.name;
        rej["guti"] = g->second.guti;
        emit(now, "guti-unknown", std::move(rej));
      }
    }
  }

  hn::FiveGAv fetched;
  const auto rotations = hn_.stats().rotations;
  try {
    if (supi) {
      fetched = hn_.request_av_5g_imsi(*supi, ctx, now);
    } else {
      Record req;
      req["to"] = ue.name;
      emit(now, "identity-request", std::move(req));
      const auto suci = encode_suci(ue::respond_identity_5g(usim, *ue.rng));
      Record r;
      r["sn"] = config_.id;
      r["type"] = "suci";
      r["value"] = to_hex(suci);
      emit_ue(ue, now, "identity-response", std::move(r));
      fetched = hn_.request_av_5g_suci(suci, ctx, now);
    }
  } catch (const ProtocolError& e) {
    fail(ue, out, std::string(to_string(e.code())), now);
    return out;
  }
  const auto& av = fetched.av;
  note_av(av, now);

  Record ch;
  ch["to"] = ue.name;
  ch["rand"] = to_hex(av.rand);
  ch["autn"] = to_hex(av.autn);
  emit(now, "challenge", std::move(ch));

  const auto answer = ue::answer_challenge(usim, config_.id, Flavor::fiveg, av.rand, av.autn, now);
  out.challenges++;
  Record res;
  res["sn"] = config_.id;
  res["verdict"] = std::string(aka::to_string(answer.verdict));
  emit_ue(ue, now, "challenge-result", std::move(res));
  if (!answer.accepted()) {
    fail(ue, out, std::string(aka::to_string(answer.verdict)), now);
    return out;
  }
  out.update = answer.update;
  out.payload = answer.payload;
  if (answer.update != ue::UpdateKind::none) {
    emit_ue(ue, now, "pseudonym-update", slots_record(usim, config_.id, answer.update));
  }

  const bool local_ok = aka::sn_check_response_5g(av, answer.res_star);
  Record rc;
  rc["to"] = ue.name;
  rc["match"] = local_ok;
  emit(now, "res-check", std::move(rc));
  if (!local_ok) {
    fail(ue, out, "res-mismatch", now);
    return out;
  }

  auto forwarded = answer.res_star;
  if (tamper_res_star) {
    forwarded[0] ^= 0x01;
  }
  if (!hn_.confirm_5g(fetched.context_id, forwarded, now)) {
    fail(ue, out, "hn-reject", now);
    return out;
  }
  out.rotated = hn_.stats().rotations > rotations;
  if (!keys_confirm(av.anchor_key, answer.session_key)) {
    fail(ue, out, "key-mismatch", now);
    return out;
  }

  const Imsi identity(usim.imsi.network(), *av.msin);
  GutiEntry entry;
  entry.identity = identity;
  entry.cdr_identity = identity;
  entry.session_key = av.anchor_key;
  entry.issued_at = now;
  entry.last_used = now;
  const auto guti = issue_guti(usim, std::move(entry));
  ue::complete_attach(usim, config_.id, ue::GutiContext{ guti, Flavor::fiveg, std::nullopt, answer.session_key, now });

  out.success = true;
  out.guti = guti;
  Record done;
  done["to"] = ue.name;
  done["guti"] = guti;
  done["lu"] = false;
  emit(now, "attach-complete", std::move(done));
  return out;
}

PageOutcome
ServingNetwork::page(const UeLink& ue, std::uint32_t guti, bool by_identity, bool reachable, bool reauth, SimTime now)
{
  PageOutcome out;
  expire_gutis(now);
  auto it = gutis_.find(guti);

  Record r;
  if (it != gutis_.end() && by_identity && config_.flavor == Flavor::lte) {
    r["by"] = "pseudonym";
    r["identity"] = it->second.identity.to_string();
  } else {
    r["by"] = "guti";
    r["identity"] = guti;
  }
  emit(now, "page", std::move(r));

  const auto ctx = ue.usim->guti_contexts.find(config_.id);
  if (it == gutis_.end() || !reachable || ctx == ue.usim->guti_contexts.end() || ctx->second.guti != guti) {
    Record t;
    t["guti"] = guti;
    emit(now, "page-timeout", std::move(t));
    return out;
  }

  out.answered = true;
  it->second.last_used = now;
  ctx->second.last_used = now;
  Record resp;
  resp["sn"] = config_.id;
  resp["guti"] = guti;
  emit_ue(ue, now, "paging-response", std::move(resp));
  if (reauth) {
    out.reauth = attach(ue, now, Trigger::paging);
  }
  return out;
}

bool
ServingNetwork::service(const UeLink& ue, const std::string& tag, SimTime now)
{
  auto& usim = *ue.usim;
  auto ctx = usim.guti_contexts.find(config_.id);
  if (ctx == usim.guti_contexts.end()) {
    return false;
  }
  expire_gutis(now);
  auto it = gutis_.find(ctx->second.guti);
  if (it == gutis_.end() || it->second.session_key != ctx->second.session_key) {
    Record r;
    r["to"] = ue.name;
    r["guti"] = ctx->second.guti;
    emit(now, "service-rejected", std::move(r));
    usim.guti_contexts.erase(ctx);
    return false;
  }
  it->second.last_used = now;
  ctx->second.last_used = now;
  cdrs_.push_back(CdrRecord{ it->second.cdr_identity, tag, now });

  Record u;
  u["sn"] = config_.id;
  u["service"] = tag;
  emit_ue(ue, now, "service", std::move(u));
  Record cdr;
  cdr["identity"] = it->second.cdr_identity.to_string();
  cdr["service"] = tag;
  emit(now, "cdr", std::move(cdr));
  return true;
}

} // namespace pseudoaka::sn
