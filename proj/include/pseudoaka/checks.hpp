#pragma once

#include "pseudoaka/hn.hpp"
#include "pseudoaka/ue.hpp"

#include <optional>
#include <string>

// Invariant checkers. Each returns a description of the first problem found.

namespace pseudoaka::sim {

/// Both UE slots must be live HN entries for the subscriber, compared as
/// (value, counter) pairs. After an error-correction reset slot1 is
/// (p2, d2 - 1), a placeholder for the same pseudonym as slot2; it counts as
/// synchronized whenever slot2 does.
std::optional<std::string> check_sync(const ue::UsimState& usim, const hn::SubscriberRecord& sub);

/// d_c < d_n < d_f; P_HN ascending and below d_c; |P_HN| <= cap; CTR above
/// every issued counter.
std::optional<std::string> check_subscriber(const hn::SubscriberRecord& sub, std::size_t cap);

/// d1 < d2; every P_UE counter below d1.
std::optional<std::string> check_usim(const ue::UsimState& usim);

/// Every pseudonym value is held by exactly one subscriber, the pool owner
/// map agrees with the records, and nothing else is marked allocated.
std::optional<std::string> check_uniqueness(const hn::HomeNetwork& hn);

} // namespace pseudoaka::sim
