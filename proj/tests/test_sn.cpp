#include "pseudoaka/checks.hpp"
#include "pseudoaka/error.hpp"
#include "pseudoaka/sn.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace pseudoaka;
using namespace pseudoaka::sn;

namespace {

const NetworkId home{ "001", "01" };

struct World
{
  MemoryTrace trace;
  Rng keygen{ 91 };
  crypto::HnKeyPair keys = crypto::generate_hn_keypair(keygen);
  hn::HomeNetwork hn{ hn::HnConfig{}, keys, Rng(92), &trace };
  std::vector<ue::UsimState> usims;
  std::vector<Rng> rngs;

  explicit World(std::size_t n = 1)
  {
    usims.reserve(n);
    rngs.reserve(n);
    for (std::size_t i = 0; i < n; i++) {
      crypto::MasterKey k;
      keygen.fill(k.bytes);
      const auto p = hn.provision(Imsi(home, 7000000000ULL + i), k);
      usims.push_back(ue::provision_usim(p.imsi, p.k, p.p1, p.p2, keys.public_key));
      rngs.emplace_back(100 + i);
    }
  }

  UeLink link(std::size_t i = 0) { return { "ue-" + std::to_string(i), &usims[i], &rngs[i] }; }

  ServingNetwork sn(SnConfig cfg) { return ServingNetwork(std::move(cfg), hn, Rng(93), &trace); }

  std::size_t count(std::string_view kind) const
  {
    return static_cast<std::size_t>(std::count_if(trace.records().begin(), trace.records().end(),
                                                  [&](const Record& r) { return r["kind"] == kind; }));
  }

  const Record* last(std::string_view kind) const
  {
    for (auto it = trace.records().rbegin(); it != trace.records().rend(); ++it) {
      if ((*it)["kind"] == kind) {
        return &*it;
      }
    }
    return nullptr;
  }
};

SnConfig
lte(std::string id = "lte-1")
{
  return { std::move(id), Flavor::lte };
}

SnConfig
fiveg(std::string id = "5g-1")
{
  return { std::move(id), Flavor::fiveg };
}

} // namespace

TEST(SnLte, HappyPathSendsLuAndRotates)
{
  World w;
  auto sn = w.sn(lte());
  const auto p2 = w.usims[0].slot2;
  const auto out = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(out.success) << out.reason;
  EXPECT_TRUE(out.lu_sent);
  EXPECT_TRUE(out.rotated);
  EXPECT_EQ(out.update, ue::UpdateKind::shifted);
  EXPECT_EQ(w.usims[0].slot1, p2);
  EXPECT_FALSE(sim::check_sync(w.usims[0], w.hn.subscriber(0)));
  ASSERT_TRUE(out.guti);
  EXPECT_EQ(sn.guti_table().at(*out.guti).identity, render_pseudonym(p2.value, home));
  // The SN only ever saw the pseudonym.
  EXPECT_EQ((*w.last("identity-response"))["value"], render_pseudonym(p2.value, home).to_string());
}

TEST(SnLte, WrongKeyUsimFailsAndNoLu)
{
  World w;
  auto sn = w.sn(lte());
  w.usims[0].k.bytes[0] ^= 1;
  const auto out = sn.attach_lte(w.link(), 10);
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.reason, "mac-failure");
  EXPECT_FALSE(out.lu_sent);
  EXPECT_EQ(w.hn.stats().lu_received, 0u);
}

TEST(SnLte, GutiReattachSkipsIdentityInquiry)
{
  World w;
  auto sn = w.sn(lte());
  const auto first = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(first.success);
  const auto inquiries = w.count("identity-request");
  const auto again = sn.attach_lte(w.link(), 20, Trigger::guti);
  ASSERT_TRUE(again.success) << again.reason;
  EXPECT_EQ(w.count("identity-request"), inquiries);
  EXPECT_EQ((*w.last("identity-response"))["type"], "guti");
  EXPECT_EQ(sn.guti_table().size(), 1u);
}

TEST(SnLte, BatchOfThreeDeliversPseudonymOnce)
{
  World w;
  auto cfg = lte();
  cfg.batch_size = 3;
  auto sn = w.sn(cfg);
  const auto first = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(first.success);
  EXPECT_EQ(first.update, ue::UpdateKind::shifted);
  const auto q = sn.guti_table().begin()->second.identity;
  EXPECT_EQ(sn.cached_avs(q), 2u);
  for (int i = 0; i < 2; i++) {
    const auto out = sn.attach_lte(w.link(), 20 + i, Trigger::guti);
    ASSERT_TRUE(out.success) << out.reason;
    EXPECT_EQ(out.update, ue::UpdateKind::none);
  }
  EXPECT_EQ(sn.cached_avs(q), 0u);
  EXPECT_EQ(w.hn.stats().av_requests, 1u);
  EXPECT_FALSE(sim::check_sync(w.usims[0], w.hn.subscriber(0)));
}

TEST(SnLte, BatchFetchBounds)
{
  World w;
  auto sn = w.sn(lte());
  ASSERT_TRUE(sn.attach_lte(w.link(), 10).success);
  const auto q = sn.guti_table().begin()->second.identity;
  EXPECT_EQ(sn.batch_fetch(q, 1, 11), 1u);
  EXPECT_EQ(sn.cached_avs(q), 1u);
  EXPECT_THROW(sn.batch_fetch(q, 0, 11), ProtocolError);
  EXPECT_THROW(sn.batch_fetch(q, 9, 11), ProtocolError);
  EXPECT_EQ(sn.batch_fetch(Imsi(home, 9999999999ULL), 2, 11), 0u);
  auto bad = lte();
  bad.batch_size = 9;
  EXPECT_THROW(w.sn(bad), ProtocolError);
}

TEST(SnLte, StaleCachedVectorsAreRefetched)
{
  World w;
  auto cfg = lte();
  cfg.batch_size = 2;
  auto sn = w.sn(cfg);
  ASSERT_TRUE(sn.attach_lte(w.link(), 10).success);
  // A newer vector from elsewhere makes the cached one a replay.
  auto other = w.sn(lte("lte-2"));
  ASSERT_TRUE(other.attach_lte(w.link(), 11).success);
  const auto out = sn.attach_lte(w.link(), 12, Trigger::guti);
  ASSERT_TRUE(out.success) << out.reason;
  EXPECT_EQ(out.challenges, 2u);
}

TEST(Sn5g, SuciAttachRotatesAndLearnsSupi)
{
  World w;
  auto sn = w.sn(fiveg());
  const auto out = sn.attach_5g(w.link(), 10);
  ASSERT_TRUE(out.success) << out.reason;
  EXPECT_TRUE(out.rotated);
  EXPECT_FALSE(out.lu_sent);
  EXPECT_EQ(sn.guti_table().at(*out.guti).identity, w.usims[0].imsi);
  EXPECT_FALSE(w.hn.subscriber(0).future);
  EXPECT_FALSE(sim::check_sync(w.usims[0], w.hn.subscriber(0)));
}

TEST(Sn5g, GutiAttachDoesNotRotate)
{
  World w;
  auto sn = w.sn(fiveg());
  ASSERT_TRUE(sn.attach_5g(w.link(), 10).success);
  const auto out = sn.attach_5g(w.link(), 20, Trigger::guti);
  ASSERT_TRUE(out.success) << out.reason;
  EXPECT_FALSE(out.rotated);
  EXPECT_EQ(out.update, ue::UpdateKind::shifted);
  EXPECT_TRUE(w.hn.subscriber(0).future);
  EXPECT_FALSE(sim::check_sync(w.usims[0], w.hn.subscriber(0)));
}

TEST(Sn5g, TamperedResStarRejectedByHome)
{
  World w;
  auto sn = w.sn(fiveg());
  const auto out = sn.attach_5g(w.link(), 10, Trigger::inquiry, true);
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.reason, "hn-reject");
  EXPECT_FALSE(out.rotated);
  EXPECT_TRUE(w.hn.subscriber(0).future);
  EXPECT_TRUE(sn.guti_table().empty());
  EXPECT_FALSE(sim::check_sync(w.usims[0], w.hn.subscriber(0)));
}

TEST(Sn5g, SuciOnWireIsFreshAndNotTheMsin)
{
  World w;
  auto sn = w.sn(fiveg());
  std::set<std::string> seen;
  for (int i = 0; i < 5; i++) {
    ASSERT_TRUE(sn.attach_5g(w.link(), 10 + i).success);
    const auto value = (*w.last("identity-response"))["value"].get<std::string>();
    EXPECT_EQ(value.find(w.usims[0].imsi.msin_string()), std::string::npos);
    seen.insert(value);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Paging, FiveGNeverPagesByIdentity)
{
  World w;
  auto sn = w.sn(fiveg());
  const auto out = sn.attach_5g(w.link(), 10);
  ASSERT_TRUE(out.success);
  const auto page = sn.page(w.link(), *out.guti, true, true, false, 20);
  EXPECT_TRUE(page.answered);
  EXPECT_EQ((*w.last("page"))["by"], "guti");
}

TEST(Paging, LteMayPageByPseudonym)
{
  World w;
  auto sn = w.sn(lte());
  const auto out = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(out.success);
  EXPECT_TRUE(sn.page(w.link(), *out.guti, true, true, false, 20).answered);
  EXPECT_EQ((*w.last("page"))["by"], "pseudonym");
}

TEST(Paging, UnreachableTimesOut)
{
  World w;
  auto sn = w.sn(lte());
  const auto out = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(out.success);
  EXPECT_FALSE(sn.page(w.link(), *out.guti, false, false, false, 20).answered);
  EXPECT_EQ(w.count("page-timeout"), 1u);
  EXPECT_FALSE(sn.page(w.link(), 12345, false, true, false, 20).answered);
}

TEST(Paging, ReauthRunsAnAka)
{
  World w;
  auto sn = w.sn(lte());
  const auto out = sn.attach_lte(w.link(), 10);
  ASSERT_TRUE(out.success);
  const auto page = sn.page(w.link(), *out.guti, false, true, true, 20);
  ASSERT_TRUE(page.reauth);
  EXPECT_TRUE(page.reauth->success);
}

TEST(Guti, ExpiresAfterLifetime)
{
  World w;
  auto cfg = lte();
  cfg.guti_lifetime = 100;
  auto sn = w.sn(cfg);
  ASSERT_TRUE(sn.attach_lte(w.link(), 0).success);
  sn.expire_gutis(99);
  EXPECT_EQ(sn.guti_table().size(), 1u);
  sn.expire_gutis(100);
  EXPECT_TRUE(sn.guti_table().empty());
  // The rejected service drops the UE's context, so the next attach
  // starts from an identity inquiry.
  EXPECT_FALSE(sn.service(w.link(), "data", 101));
  EXPECT_EQ(w.count("service-rejected"), 1u);
  EXPECT_TRUE(w.usims[0].guti_contexts.empty());
  const auto inquiries = w.count("identity-request");
  EXPECT_TRUE(sn.attach_lte(w.link(), 102, Trigger::guti).success);
  EXPECT_EQ(w.count("identity-request"), inquiries + 1);
}

TEST(LawfulInterception, PatchedSnLearnsMsin)
{
  World w;
  auto cfg = lte();
  cfg.li_patched = true;
  auto sn = w.sn(cfg);
  ASSERT_TRUE(sn.attach_lte(w.link(), 10).success);
  ASSERT_EQ(sn.li_log().size(), 1u);
  EXPECT_EQ(sn.li_log()[0], w.usims[0].imsi.msin());
  ASSERT_TRUE(sn.service(w.link(), "voice", 11));
  EXPECT_EQ(sn.cdrs().back().identity, w.usims[0].imsi);
}

TEST(LawfulInterception, UnpatchedCdrsCarryPseudonyms)
{
  World w;
  auto sn = w.sn(lte());
  ASSERT_TRUE(sn.attach_lte(w.link(), 10).success);
  EXPECT_TRUE(sn.li_log().empty());
  ASSERT_TRUE(sn.service(w.link(), "voice", 11));
  const auto identity = sn.cdrs().back().identity;
  EXPECT_NE(identity, w.usims[0].imsi);
  EXPECT_EQ(w.hn.resolve_cdr({ identity, "lte-1", "voice", 11 }), w.usims[0].imsi);
}

TEST(LawfulInterception, KeyBindingNeedsBothSides)
{
  World w;
  auto cfg = lte();
  cfg.li_patched = true;
  cfg.li_key_binding = true;
  auto sn = w.sn(cfg);
  const auto mismatch = sn.attach_lte(w.link(), 10);
  EXPECT_FALSE(mismatch.success);
  EXPECT_EQ(mismatch.reason, "key-mismatch");

  w.usims[0].li_key_binding = true;
  const auto bound = sn.attach_lte(w.link(), 20);
  EXPECT_TRUE(bound.success) << bound.reason;
}

TEST(Service, RecordsCdrUnderContext)
{
  World w(2);
  auto sn = w.sn(lte());
  EXPECT_FALSE(sn.service(w.link(0), "data", 5));
  ASSERT_TRUE(sn.attach_lte(w.link(0), 10).success);
  ASSERT_TRUE(sn.attach_lte(w.link(1), 10).success);
  EXPECT_TRUE(sn.service(w.link(0), "data", 11));
  EXPECT_TRUE(sn.service(w.link(1), "sms", 12));
  ASSERT_EQ(sn.cdrs().size(), 2u);
  EXPECT_NE(sn.cdrs()[0].identity, sn.cdrs()[1].identity);
  EXPECT_EQ(w.count("cdr"), 2u);
}
