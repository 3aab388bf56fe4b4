#include "pseudoaka/aka.hpp"

#include <gtest/gtest.h>

using namespace pseudoaka;
using namespace pseudoaka::aka;

namespace {

struct Fixture
{
  crypto::MasterKey k;
  std::uint64_t msin = 1234567890;
  SqnState hn_sqn;
  SqnState ue_sqn;
  Block128 rand{};

  explicit Fixture(std::uint64_t seed)
  {
    Rng rng(seed);
    rng.fill(k.bytes);
    rng.fill(rand);
  }
};

} // namespace

TEST(BuildAv, ConsecutiveBuildsUseFreshSqn)
{
  Fixture f(41);
  const AvRequestContext ctx{ "lte-1", false, false };
  const auto a = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, ctx);
  const auto b = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, ctx);
  EXPECT_EQ(f.hn_sqn.value, 2u);
  EXPECT_EQ(a.av.rand, b.av.rand);
  EXPECT_NE(a.av.autn, b.av.autn);
}

TEST(BuildAv, MsinOnlyTowardPatchedSn)
{
  Fixture f(42);
  EXPECT_FALSE(build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1", false, false }).av.msin);
  const auto patched = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1", true, false });
  ASSERT_TRUE(patched.av.msin);
  EXPECT_EQ(*patched.av.msin, f.msin);
}

TEST(BuildAv, FlavorSelectsResponseField)
{
  Fixture f(43);
  const auto lte = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  EXPECT_TRUE(lte.av.xres);
  EXPECT_FALSE(lte.av.hxres_star);
  EXPECT_FALSE(lte.xres_star);
  const auto g = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::fiveg, { "5g-1" });
  EXPECT_FALSE(g.av.xres);
  EXPECT_TRUE(g.av.hxres_star);
  ASSERT_TRUE(g.xres_star);
  EXPECT_EQ(*g.av.hxres_star, crypto::hres_star(g.av.rand, *g.xres_star));
}

TEST(VerifyChallenge, HonestVectorAccepted)
{
  Fixture f(44);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  const auto r = verify_challenge(f.k, f.ue_sqn, built.av.rand, built.av.autn);
  EXPECT_TRUE(r.accepted());
  EXPECT_EQ(f.ue_sqn.value, f.hn_sqn.value);
  EXPECT_TRUE(sn_check_response_lte(built.av, r.res));
  const auto k_ue = crypto::derive_session_keys(r.ck_ik, "lte-1", Flavor::lte, std::nullopt);
  EXPECT_EQ(k_ue, built.av.anchor_key);
}

TEST(VerifyChallenge, ReplayRejected)
{
  Fixture f(45);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  ASSERT_TRUE(verify_challenge(f.k, f.ue_sqn, built.av.rand, built.av.autn).accepted());
  const auto before = f.ue_sqn.value;
  const auto again = verify_challenge(f.k, f.ue_sqn, built.av.rand, built.av.autn);
  EXPECT_EQ(again.verdict, ChallengeVerdict::sqn_replay);
  EXPECT_EQ(f.ue_sqn.value, before);
}

TEST(VerifyChallenge, OutOfOrderOlderVectorIsReplay)
{
  Fixture f(46);
  const auto first = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  const auto second = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  ASSERT_TRUE(verify_challenge(f.k, f.ue_sqn, second.av.rand, second.av.autn).accepted());
  EXPECT_EQ(verify_challenge(f.k, f.ue_sqn, first.av.rand, first.av.autn).verdict, ChallengeVerdict::sqn_replay);
}

TEST(VerifyChallenge, AnyFlippedAutnBitIsMacFailure)
{
  Fixture f(47);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  for (int bit = 0; bit < 128; bit++) {
    auto autn = built.av.autn;
    autn[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    SqnState sqn;
    const auto r = verify_challenge(f.k, sqn, built.av.rand, autn);
    EXPECT_EQ(r.verdict, ChallengeVerdict::mac_failure) << "bit " << bit;
    EXPECT_EQ(sqn.value, 0u);
  }
}

TEST(VerifyChallenge, WrongKeyIsMacFailure)
{
  Fixture f(48);
  Fixture other(49);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  EXPECT_EQ(verify_challenge(other.k, other.ue_sqn, built.av.rand, built.av.autn).verdict,
            ChallengeVerdict::mac_failure);
}

TEST(Responses, FiveGChecksAtSnAndHn)
{
  Fixture f(50);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::fiveg, { "5g-1" });
  const auto r = verify_challenge(f.k, f.ue_sqn, built.av.rand, built.av.autn);
  ASSERT_TRUE(r.accepted());
  const auto res_star = crypto::derive_res_star(r.ck_ik, "5g-1", built.av.rand, r.res);
  EXPECT_TRUE(sn_check_response_5g(built.av, res_star));
  EXPECT_TRUE(hn_check_response_5g(*built.xres_star, res_star));

  auto tampered = res_star;
  tampered[0] ^= 1;
  EXPECT_FALSE(sn_check_response_5g(built.av, tampered));
  EXPECT_FALSE(hn_check_response_5g(*built.xres_star, tampered));
  // A response bound to another serving network fails too.
  EXPECT_FALSE(sn_check_response_5g(built.av, crypto::derive_res_star(r.ck_ik, "5g-2", built.av.rand, r.res)));
}

TEST(Responses, RandomResponsesFail)
{
  Fixture f(51);
  Rng rng(52);
  const auto lte = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1" });
  const auto g = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::fiveg, { "5g-1" });
  for (int i = 0; i < 100; i++) {
    crypto::Mac64 res;
    rng.fill(res);
    crypto::ResStar rs;
    rng.fill(rs);
    EXPECT_FALSE(sn_check_response_lte(lte.av, res));
    EXPECT_FALSE(sn_check_response_5g(g.av, rs));
    EXPECT_FALSE(hn_check_response_5g(*g.xres_star, rs));
  }
  // Flavor mismatch never passes.
  EXPECT_FALSE(sn_check_response_5g(lte.av, crypto::ResStar{}));
  EXPECT_FALSE(sn_check_response_lte(g.av, crypto::Mac64{}));
}

TEST(BuildAv, KeyBindingChangesLteAnchorKey)
{
  Fixture f(53);
  SqnState s1;
  SqnState s2;
  const auto plain = build_av(f.k, f.msin, s1, f.rand, Flavor::lte, { "lte-1", true, false });
  const auto bound = build_av(f.k, f.msin, s2, f.rand, Flavor::lte, { "lte-1", true, true });
  EXPECT_NE(plain.av.anchor_key, bound.av.anchor_key);
  const auto r = verify_challenge(f.k, f.ue_sqn, bound.av.rand, bound.av.autn);
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(crypto::derive_session_keys(r.ck_ik, "lte-1", Flavor::lte, f.msin), bound.av.anchor_key);
}

TEST(AvJson, HexFields)
{
  Fixture f(54);
  const auto built = build_av(f.k, f.msin, f.hn_sqn, f.rand, Flavor::lte, { "lte-1", true, false });
  const auto j = to_json(built.av);
  EXPECT_EQ(j["flavor"], "lte");
  EXPECT_EQ(j["rand"], to_hex(f.rand));
  EXPECT_EQ(j["msin"], "1234567890");
  EXPECT_TRUE(j.contains("k_asme"));
  EXPECT_FALSE(j.contains("hxres_star"));
}
