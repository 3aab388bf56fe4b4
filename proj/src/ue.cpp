#include "pseudoaka/ue.hpp"
#include "pseudoaka/error.hpp"

#include <algorithm>

namespace pseudoaka::ue {

std::uint32_t
UsimState::delta_min() const
{
  std::uint32_t m = std::min(slot1.counter, slot2.counter);
  for (const auto& old : p_ue) {
    m = std::min(m, old.entry.counter);
  }
  return m;
}

bool
UsimState::holds(std::uint64_t value) const
{
  if (slot1.value == value || slot2.value == value) {
    return true;
  }
  return std::any_of(p_ue.begin(), p_ue.end(), [&](const OldPseudonym& o) { return o.entry.value == value; });
}

UsimState
provision_usim(const Imsi& imsi,
               const crypto::MasterKey& k,
               const PseudonymEntry& p1,
               const PseudonymEntry& p2,
               std::optional<Key256> hn_public_key,
               std::uint8_t hnpki)
{
  UsimState s;
  s.imsi = imsi;
  s.k = k;
  s.kappa = crypto::derive_pseudonym_key(k);
  s.hn_public_key = hn_public_key;
  s.hnpki = hnpki;
  s.slot1 = p1;
  s.slot2 = p2;
  return s;
}

Imsi
respond_identity_lte(UsimState& usim, const std::string& sn_id)
{
  auto& sent = usim.exposed[sn_id];
  const bool fall_back = sent.contains(usim.slot2.value) && !sent.contains(usim.slot1.value);
  const auto& chosen = fall_back ? usim.slot1 : usim.slot2;
  sent.insert(chosen.value);
  return render_pseudonym(chosen.value, usim.imsi.network());
}

Suci
respond_identity_5g(const UsimState& usim, Rng& rng)
{
  if (!usim.hn_public_key) {
    return make_null_scheme_suci(usim.imsi.network(), usim.imsi.msin());
  }
  SuciPlaintext pt;
  pt.msin = usim.imsi.msin();
  pt.delta_min = usim.delta_min();
  pt.delta_max = usim.delta_max();
  pt.tag = crypto::mac(usim.k, suci_mac_input(pt.msin, pt.delta_min, pt.delta_max));

  Suci suci;
  suci.hnid = usim.imsi.network();
  suci.hnpki = usim.hnpki;
  suci.supipsi = static_cast<std::uint8_t>(ProtectionScheme::hybrid_x25519);
  suci.ciphertext = crypto::pke_encrypt(*usim.hn_public_key, encode_suci_plaintext(pt), rng);
  return suci;
}

std::string_view
to_string(UpdateKind kind)
{
  switch (kind) {
    case UpdateKind::none:
      return "none";
    case UpdateKind::shifted:
      return "shifted";
    case UpdateKind::reset:
      return "reset";
  }
  return "?";
}

UpdateKind
update_pseudonyms_ue(UsimState& usim, const RandPayload& payload, SimTime now)
{
  if (payload.pseudonym >= msin_space) {
    throw ProtocolError(ErrorCode::unrenderable_pseudonym, "embedded pseudonym does not fit 10 digits");
  }
  if (payload.ecf == 1) {
    if (payload.counter == 0) {
      throw ProtocolError(ErrorCode::width_violation, "reset counter must be positive");
    }
    usim.p_ue.clear();
    usim.slot1 = PseudonymEntry{ payload.pseudonym, payload.counter - 1 };
    usim.slot2 = PseudonymEntry{ payload.pseudonym, payload.counter };
    usim.exposed.clear();
    return UpdateKind::reset;
  }
  if (payload.counter > usim.slot2.counter) {
    usim.p_ue.push_back(OldPseudonym{ usim.slot1, now });
    usim.slot1 = usim.slot2;
    usim.slot2 = PseudonymEntry{ payload.pseudonym, payload.counter };
    usim.exposed.clear();
    return UpdateKind::shifted;
  }
  return UpdateKind::none;
}

ChallengeAnswer
answer_challenge(UsimState& usim,
                 const std::string& sn_id,
                 crypto::Flavor flavor,
                 const Block128& rand,
                 const Block128& autn,
                 SimTime now)
{
  ChallengeAnswer out;
  const auto check = aka::verify_challenge(usim.k, usim.sqn, rand, autn);
  out.verdict = check.verdict;
  if (!check.accepted()) {
    return out;
  }

  const auto payload = decode_rand_payload(crypto::decrypt_rand(usim.kappa, rand));
  out.payload = payload;
  try {
    out.update = update_pseudonyms_ue(usim, payload, now);
  } catch (const ProtocolError&) {
    out.corrupt_payload = true;
  }

  out.res = check.res;
  std::optional<std::uint64_t> binding;
  if (flavor == crypto::Flavor::lte && usim.li_key_binding) {
    binding = usim.imsi.msin();
  }
  out.session_key = crypto::derive_session_keys(check.ck_ik, sn_id, flavor, binding);
  if (flavor == crypto::Flavor::fiveg) {
    out.res_star = crypto::derive_res_star(check.ck_ik, sn_id, rand, check.res);
  }
  return out;
}

void
complete_attach(UsimState& usim, const std::string& sn_id, GutiContext context)
{
  usim.guti_contexts[sn_id] = context;
  usim.exposed.erase(sn_id);
}

std::vector<PseudonymEntry>
apply_removal_policy(UsimState& usim, SimTime now, const std::optional<std::string>& attached_sn)
{
  const auto last_use = [&](const OldPseudonym& old) {
    SimTime t = old.retired_at;
    for (const auto& [sn, ctx] : usim.guti_contexts) {
      if (ctx.pseudonym == old.entry.value) {
        t = std::max(t, ctx.last_used);
      }
    }
    return t;
  };
  const auto pinned = [&](const OldPseudonym& old) {
    if (!attached_sn) {
      return false;
    }
    auto it = usim.guti_contexts.find(*attached_sn);
    return it != usim.guti_contexts.end() && it->second.pseudonym == old.entry.value;
  };

  std::vector<PseudonymEntry> removed;
  std::erase_if(usim.p_ue, [&](const OldPseudonym& old) {
    if (now - last_use(old) > usim.policy.max_age && !pinned(old)) {
      removed.push_back(old.entry);
      return true;
    }
    return false;
  });
  while (usim.p_ue.size() > usim.policy.max_size) {
    removed.push_back(usim.p_ue.front().entry);
    usim.p_ue.erase(usim.p_ue.begin());
  }

  if (!usim.retain_stale_guti) {
    for (const auto& e : removed) {
      // A value may sit in P_UE and a slot at once after a reset.
      if (usim.holds(e.value)) {
        continue;
      }
      std::erase_if(usim.guti_contexts, [&](const auto& kv) { return kv.second.pseudonym == e.value; });
    }
  }
  return removed;
}

std::optional<RegistrationIntent>
reregister_before_drop(const UsimState& usim, const std::string& attached_sn)
{
  auto it = usim.guti_contexts.find(attached_sn);
  if (it == usim.guti_contexts.end() || !it->second.pseudonym) {
    return std::nullopt;
  }
  const auto value = *it->second.pseudonym;
  if (value == usim.slot1.value || value == usim.slot2.value) {
    return std::nullopt;
  }
  const bool old = std::any_of(usim.p_ue.begin(), usim.p_ue.end(), [&](const OldPseudonym& o) { return o.entry.value == value; });
  if (!old) {
    return std::nullopt;
  }
  return RegistrationIntent{ attached_sn, value };
}

Record
to_json(const UsimState& usim)
{
  Record j;
  j["imsi"] = usim.imsi.to_string();
  j["p1"] = format_msin(usim.slot1.value);
  j["d1"] = usim.slot1.counter;
  j["p2"] = format_msin(usim.slot2.value);
  j["d2"] = usim.slot2.counter;
  auto& old = j["p_ue"] = Record::array();
  for (const auto& o : usim.p_ue) {
    old.push_back(Record{ { "p", format_msin(o.entry.value) }, { "d", o.entry.counter } });
  }
  j["sqn"] = usim.sqn.value;
  return j;
}

} // namespace pseudoaka::ue
