#include "pseudoaka/checks.hpp"

#include <algorithm>
#include <unordered_set>

namespace pseudoaka::sim {

namespace {

std::string
entry_string(const PseudonymEntry& e)
{
  return "(" + format_msin(e.value) + ", " + std::to_string(e.counter) + ")";
}

bool
live(const hn::SubscriberRecord& sub, const PseudonymEntry& e)
{
  const auto found = sub.find_pseudonym(e.value);
  return found && found->counter == e.counter;
}

} // namespace

std::optional<std::string>
check_sync(const ue::UsimState& usim, const hn::SubscriberRecord& sub)
{
  if (!live(sub, usim.slot2)) {
    return "slot2 " + entry_string(usim.slot2) + " is not held by the home network";
  }
  const bool placeholder = usim.slot1.value == usim.slot2.value && usim.slot1.counter + 1 == usim.slot2.counter;
  if (!placeholder && !live(sub, usim.slot1)) {
    return "slot1 " + entry_string(usim.slot1) + " is not held by the home network";
  }
  return std::nullopt;
}

std::optional<std::string>
check_subscriber(const hn::SubscriberRecord& sub, std::size_t cap)
{
  if (!(sub.current.counter < sub.next.counter)) {
    return "d_c >= d_n";
  }
  if (sub.future && !(sub.next.counter < sub.future->counter)) {
    return "d_n >= d_f";
  }
  if (sub.retired.size() > cap) {
    return "P_HN holds " + std::to_string(sub.retired.size()) + " entries, cap is " + std::to_string(cap);
  }
  for (std::size_t i = 0; i < sub.retired.size(); i++) {
    if (sub.retired[i].counter >= sub.current.counter) {
      return "P_HN entry " + entry_string(sub.retired[i]) + " not older than p_c";
    }
    if (i > 0 && sub.retired[i - 1].counter >= sub.retired[i].counter) {
      return "P_HN counters not strictly increasing";
    }
  }
  const auto newest = sub.future ? sub.future->counter : sub.next.counter;
  if (sub.ctr <= newest) {
    return "CTR " + std::to_string(sub.ctr) + " not above issued counter " + std::to_string(newest);
  }
  return std::nullopt;
}

std::optional<std::string>
check_usim(const ue::UsimState& usim)
{
  if (!(usim.slot1.counter < usim.slot2.counter)) {
    return "d1 >= d2";
  }
  for (const auto& old : usim.p_ue) {
    if (old.entry.counter >= usim.slot1.counter) {
      return "P_UE entry " + entry_string(old.entry) + " not older than p1";
    }
  }
  return std::nullopt;
}

std::optional<std::string>
check_uniqueness(const hn::HomeNetwork& hn)
{
  const auto& pool = hn.pool();
  std::size_t expected = 0;
  for (const auto& sub : hn.subscribers()) {
    if (pool.in_space(sub.imsi.msin())) {
      expected++;
      if (pool.owner(sub.imsi.msin()) != sub.id) {
        return "IMSI " + sub.imsi.to_string() + " not reserved in the pool";
      }
    }
    const auto entries = sub.live_entries();
    for (std::size_t i = 0; i < entries.size(); i++) {
      const auto value = entries[i].value;
      for (std::size_t j = 0; j < i; j++) {
        if (entries[j].value == value) {
          return "subscriber " + sub.imsi.to_string() + " holds " + format_msin(value) + " twice";
        }
      }
      if (pool.owner(value) != sub.id) {
        return "pseudonym " + format_msin(value) + " of " + sub.imsi.to_string() + " is owned by another subscriber";
      }
    }
    expected += entries.size();
  }
  if (pool.allocated_count() != expected) {
    return "pool marks " + std::to_string(pool.allocated_count()) + " values allocated, records hold " +
           std::to_string(expected);
  }
  return std::nullopt;
}

} // namespace pseudoaka::sim
