#include "oracles.hpp"

#include "pseudoaka/checks.hpp"
#include "pseudoaka/error.hpp"
#include "pseudoaka/ue.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace pseudoaka;
using namespace pseudoaka::ue;

namespace {

const NetworkId home{ "001", "01" };

struct Fixture
{
  Rng rng{ 61 };
  crypto::HnKeyPair keys = crypto::generate_hn_keypair(rng);
  crypto::MasterKey k;
  UsimState usim;

  Fixture()
  {
    rng.fill(k.bytes);
    usim = provision_usim(Imsi(home, 1112223334), k, { 100, 1 }, { 200, 2 }, keys.public_key);
  }

  oracle::OpenedSuci open(const Suci& s) const
  {
    const auto opened = oracle::open_suci(keys.private_key, encode_suci(s));
    EXPECT_TRUE(opened.has_value());
    return opened.value_or(oracle::OpenedSuci{});
  }
};

RandPayload
payload(std::uint64_t p, std::uint32_t d, std::uint8_t ecf = 0)
{
  return { p, d, ecf, 0x123 };
}

} // namespace

TEST(IdentityLte, PrefersSecondSlot)
{
  Fixture f;
  EXPECT_EQ(respond_identity_lte(f.usim, "lte-1"), render_pseudonym(200, home));
}

TEST(IdentityLte, FallsBackToFirstSlotAfterIncompleteAttach)
{
  Fixture f;
  respond_identity_lte(f.usim, "lte-1");
  EXPECT_EQ(respond_identity_lte(f.usim, "lte-1").msin(), 100u);
  // Both were exposed: back to p2.
  EXPECT_EQ(respond_identity_lte(f.usim, "lte-1").msin(), 200u);
  // Another SN has seen nothing.
  EXPECT_EQ(respond_identity_lte(f.usim, "lte-2").msin(), 200u);
}

TEST(IdentityLte, NeverTheImsi)
{
  Fixture f;
  Rng rng(62);
  for (int i = 0; i < 200; i++) {
    const auto sn = "lte-" + std::to_string(rng.below(3));
    EXPECT_NE(respond_identity_lte(f.usim, sn), f.usim.imsi);
    if (rng.chance(0.3)) {
      complete_attach(f.usim, sn, {});
    }
    if (rng.chance(0.2)) {
      update_pseudonyms_ue(f.usim, payload(rng.below(10000), f.usim.slot2.counter + 1));
    }
  }
}

TEST(IdentityLte, CompletedAttachClearsExposure)
{
  Fixture f;
  respond_identity_lte(f.usim, "lte-1");
  complete_attach(f.usim, "lte-1", {});
  EXPECT_EQ(respond_identity_lte(f.usim, "lte-1").msin(), 200u);
}

TEST(Suci5g, EmptyOldSetGivesFirstSlotCounter)
{
  Fixture f;
  f.usim.slot1 = { 100, 4 };
  f.usim.slot2 = { 200, 5 };
  const auto o = f.open(respond_identity_5g(f.usim, f.rng));
  EXPECT_EQ(o.msin, 1112223334u);
  EXPECT_EQ(o.dmin, 4u);
  EXPECT_EQ(o.dmax, 5u);
  EXPECT_EQ(o.tag, oracle::suci_tag(f.k.bytes, 1112223334, 4, 5));
}

TEST(Suci5g, OldPseudonymsLowerDeltaMin)
{
  Fixture f;
  f.usim.slot1 = { 100, 4 };
  f.usim.slot2 = { 200, 5 };
  f.usim.p_ue = { { { 300, 1 }, 0 } };
  const auto o = f.open(respond_identity_5g(f.usim, f.rng));
  EXPECT_EQ(o.dmin, 1u);
  EXPECT_EQ(o.dmax, 5u);
}

TEST(Suci5g, RepeatedSucisAreUnlinkable)
{
  Fixture f;
  std::set<Bytes> seen;
  for (int i = 0; i < 100; i++) {
    seen.insert(encode_suci(respond_identity_5g(f.usim, f.rng)));
  }
  EXPECT_EQ(seen.size(), 100u);
}

TEST(Suci5g, NullSchemeWithoutHnKey)
{
  Fixture f;
  f.usim.hn_public_key.reset();
  const auto s = respond_identity_5g(f.usim, f.rng);
  EXPECT_EQ(s.supipsi, 0);
  EXPECT_EQ(decode_msin_bcd(s.ciphertext), 1112223334u);
}

TEST(UpdateUe, LargerCounterShifts)
{
  Fixture f;
  EXPECT_EQ(update_pseudonyms_ue(f.usim, payload(300, 3), 50), UpdateKind::shifted);
  EXPECT_EQ(f.usim.slot1, (PseudonymEntry{ 200, 2 }));
  EXPECT_EQ(f.usim.slot2, (PseudonymEntry{ 300, 3 }));
  ASSERT_EQ(f.usim.p_ue.size(), 1u);
  EXPECT_EQ(f.usim.p_ue[0].entry, (PseudonymEntry{ 100, 1 }));
  EXPECT_EQ(f.usim.p_ue[0].retired_at, 50);
}

TEST(UpdateUe, EqualOrSmallerCounterIsNoOp)
{
  Fixture f;
  EXPECT_EQ(update_pseudonyms_ue(f.usim, payload(200, 2)), UpdateKind::none);
  EXPECT_EQ(update_pseudonyms_ue(f.usim, payload(999, 1)), UpdateKind::none);
  EXPECT_EQ(f.usim.slot1, (PseudonymEntry{ 100, 1 }));
  EXPECT_EQ(f.usim.slot2, (PseudonymEntry{ 200, 2 }));
  EXPECT_TRUE(f.usim.p_ue.empty());
}

TEST(UpdateUe, EcfResetsToEmbeddedPseudonym)
{
  Fixture f;
  f.usim.slot2 = { 200, 1000000 };
  f.usim.p_ue = { { { 50, 0 }, 0 } };
  EXPECT_EQ(update_pseudonyms_ue(f.usim, payload(777, 9, 1)), UpdateKind::reset);
  EXPECT_EQ(f.usim.slot1, (PseudonymEntry{ 777, 8 }));
  EXPECT_EQ(f.usim.slot2, (PseudonymEntry{ 777, 9 }));
  EXPECT_TRUE(f.usim.p_ue.empty());
  EXPECT_FALSE(sim::check_usim(f.usim));
}

TEST(UpdateUe, UnrenderablePseudonymRejectedWithStateUnchanged)
{
  Fixture f;
  const auto before = to_json(f.usim);
  try {
    update_pseudonyms_ue(f.usim, payload(msin_space, 3));
    ADD_FAILURE();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), ErrorCode::unrenderable_pseudonym);
  }
  EXPECT_EQ(to_json(f.usim), before);
}

TEST(UpdateUe, CountersStayOrderedUnderRandomPayloads)
{
  Fixture f;
  Rng rng(63);
  for (int i = 0; i < 5000; i++) {
    auto p = payload(rng.below(std::uint64_t{ 1 } << 34), static_cast<std::uint32_t>(rng.below(2000)),
                     static_cast<std::uint8_t>(rng.chance(0.05)));
    if (p.ecf == 1 && p.counter == 0) {
      p.counter = 1;
    }
    const auto before = to_json(f.usim);
    try {
      update_pseudonyms_ue(f.usim, p, i);
    } catch (const ProtocolError&) {
      ASSERT_EQ(to_json(f.usim), before);
    }
    ASSERT_FALSE(sim::check_usim(f.usim)) << *sim::check_usim(f.usim);
    ASSERT_LT(f.usim.slot2.value, msin_space);
  }
}

TEST(Challenge, ForgedAutnLeavesStateUntouched)
{
  Fixture f;
  Block128 rand{};
  Block128 autn{};
  f.rng.fill(rand);
  f.rng.fill(autn);
  const auto before = to_json(f.usim);
  const auto ans = answer_challenge(f.usim, "lte-1", crypto::Flavor::lte, rand, autn, 0);
  EXPECT_FALSE(ans.accepted());
  EXPECT_FALSE(ans.payload);
  EXPECT_EQ(to_json(f.usim), before);
}

TEST(RemovalPolicy, DropsIdleEntriesAndTheirContexts)
{
  Fixture f;
  f.usim.policy = { 100, 10 };
  f.usim.p_ue = { { { 50, 0 }, 0 } };
  complete_attach(f.usim, "lte-1", { 1, crypto::Flavor::lte, 50, {}, 10 });
  EXPECT_TRUE(apply_removal_policy(f.usim, 100, std::nullopt).empty());
  const auto removed = apply_removal_policy(f.usim, 111, std::nullopt);
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_TRUE(f.usim.p_ue.empty());
  EXPECT_TRUE(f.usim.guti_contexts.empty());
}

TEST(RemovalPolicy, PinnedAtAttachedSnIsKept)
{
  Fixture f;
  f.usim.policy = { 100, 10 };
  f.usim.p_ue = { { { 50, 0 }, 0 } };
  complete_attach(f.usim, "lte-1", { 1, crypto::Flavor::lte, 50, {}, 0 });
  EXPECT_TRUE(apply_removal_policy(f.usim, 1000, std::string("lte-1")).empty());
  EXPECT_EQ(f.usim.p_ue.size(), 1u);
}

TEST(RemovalPolicy, SizeBoundEvictsOldest)
{
  Fixture f;
  f.usim.policy = { 1000000, 2 };
  f.usim.slot1 = { 100, 10 };
  f.usim.slot2 = { 200, 11 };
  f.usim.p_ue = { { { 1, 1 }, 0 }, { { 2, 2 }, 0 }, { { 3, 3 }, 0 } };
  const auto removed = apply_removal_policy(f.usim, 10, std::nullopt);
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_EQ(removed[0].value, 1u);
  EXPECT_EQ(f.usim.p_ue.size(), 2u);
}

TEST(RemovalPolicy, StaleGutiRetainedWhenMisbehaving)
{
  Fixture f;
  f.usim.policy = { 100, 10 };
  f.usim.retain_stale_guti = true;
  f.usim.p_ue = { { { 50, 0 }, 0 } };
  complete_attach(f.usim, "lte-1", { 1, crypto::Flavor::lte, 50, {}, 0 });
  EXPECT_EQ(apply_removal_policy(f.usim, 1000, std::nullopt).size(), 1u);
  EXPECT_EQ(f.usim.guti_contexts.size(), 1u);
}

TEST(Reregister, OnlyWhenAttachedContextUsesOldPseudonym)
{
  Fixture f;
  EXPECT_FALSE(reregister_before_drop(f.usim, "lte-1"));
  complete_attach(f.usim, "lte-1", { 1, crypto::Flavor::lte, 200, {}, 0 });
  EXPECT_FALSE(reregister_before_drop(f.usim, "lte-1"));
  update_pseudonyms_ue(f.usim, payload(300, 3));
  update_pseudonyms_ue(f.usim, payload(400, 4));
  const auto intent = reregister_before_drop(f.usim, "lte-1");
  ASSERT_TRUE(intent);
  EXPECT_EQ(intent->stale_pseudonym, 200u);
  complete_attach(f.usim, "5g-1", { 2, crypto::Flavor::fiveg, std::nullopt, {}, 0 });
  EXPECT_FALSE(reregister_before_drop(f.usim, "5g-1"));
}
