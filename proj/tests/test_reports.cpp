#include "pseudoaka/error.hpp"
#include "pseudoaka/reports.hpp"
#include "pseudoaka/sim.hpp"

#include <gtest/gtest.h>

using namespace pseudoaka;
using namespace pseudoaka::sim;

namespace {

Scenario
bundled(const std::string& name)
{
  return load_scenario(std::string(PSEUDOAKA_SOURCE_DIR) + "/scenarios/" + name + ".cfg");
}

/// Hand-built trace: one UE, an LTE catcher "fake" and a 5G catcher "fake-5g".
struct TraceBuilder
{
  MemoryTrace trace;

  TraceBuilder()
  {
    Record header;
    header["run_id"] = "0000000000000001";
    header["serving_networks"] = Record::array({ Record{ { "id", "5g-1" }, { "flavor", "5g" } } });
    header["adversaries"] = Record::array({ Record{ { "kind", "active-lte-catcher" }, { "id", "fake" } },
                                            Record{ { "kind", "active-5g-catcher" }, { "id", "fake-5g" } } });
    trace.emit(0, "sim", "header", header);
    trace.emit(0, "sim", "ue-provisioned",
               Record{ { "ue", "u" }, { "imsi", "001011234567890" }, { "p1", "0000000001" }, { "p2", "0000000002" } });
  }

  void identity(const std::string& sn, const std::string& type, const std::string& value)
  {
    trace.emit(1, "u", "identity-response", Record{ { "sn", sn }, { "type", type }, { "value", value } });
  }

  void update(const std::string& p1, const std::string& p2)
  {
    trace.emit(1, "u", "pseudonym-update", Record{ { "sn", "lte-1" }, { "p1", p1 }, { "p2", p2 } });
  }

  LinkabilityReport assess() const { return assess_linkability(trace.to_jsonl()); }
};

} // namespace

TEST(Linkability, TwoIdentitiesPerWindowIsClean)
{
  TraceBuilder b;
  b.identity("fake", "pseudonym", "001010000000002");
  b.identity("fake", "pseudonym", "001010000000001");
  b.identity("fake", "pseudonym", "001010000000002");
  b.update("0000000002", "0000000003");
  b.identity("fake", "pseudonym", "001010000000003");
  const auto r = b.assess();
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.lte_inquiries, 4u);
  EXPECT_EQ(r.lte_max_window, 2u);
  EXPECT_EQ(r.lte_windows, 2u);
  EXPECT_EQ(r.lte_harvested, 3u);
}

TEST(Linkability, ThirdIdentityInAWindowIsFlagged)
{
  TraceBuilder b;
  b.identity("fake", "pseudonym", "001010000000002");
  b.identity("fake", "pseudonym", "001010000000001");
  b.identity("fake", "pseudonym", "001010000000009");
  const auto r = b.assess();
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.lte_max_window, 3u);
  EXPECT_EQ(r.lte_window_violations, 1u);
  EXPECT_EQ(r.out_of_slot, 1u);
}

TEST(Linkability, CleartextMsinIsFlagged)
{
  TraceBuilder b;
  b.identity("fake", "pseudonym", "001011234567890");
  EXPECT_EQ(b.assess().cleartext_msin, 1u);
}

TEST(Linkability, RepeatedSuciIsFlagged)
{
  TraceBuilder b;
  b.identity("fake-5g", "suci", "00101f0101aa");
  b.identity("fake-5g", "suci", "00101f0101bb");
  EXPECT_EQ(b.assess().suci_duplicates, 0u);
  b.identity("fake-5g", "suci", "00101f0101aa");
  const auto r = b.assess();
  EXPECT_EQ(r.suci_harvested, 3u);
  EXPECT_EQ(r.suci_duplicates, 1u);
  EXPECT_FALSE(r.ok());
}

TEST(Linkability, ReusedPseudonymAfterLeavingSlotsIsFlagged)
{
  TraceBuilder b;
  b.identity("lte-1", "pseudonym", "001010000000001");
  b.update("0000000002", "0000000003");
  b.identity("lte-1", "pseudonym", "001010000000001");
  const auto r = b.assess();
  EXPECT_EQ(r.out_of_slot, 1u);
  EXPECT_FALSE(r.ok());
}

TEST(Linkability, DowngradeScenarioIsContained)
{
  const auto r = run(bundled("downgrade_attack"), 3);
  ASSERT_TRUE(r.ok());
  const auto rep = assess_linkability(r.trace);
  EXPECT_TRUE(rep.ok()) << rep.to_json().dump();
  EXPECT_GT(rep.lte_inquiries, 0u);
  EXPECT_GT(rep.suci_harvested, 0u);
  EXPECT_LE(rep.lte_max_window, 2u);
  // The streaming assessor inside the run agrees with the offline one.
  EXPECT_EQ(r.linkability.to_json(), rep.to_json());
}

TEST(Billing, HonestRunResolvesEverything)
{
  const auto r = run(bundled("honest_mixed"), 4);
  ASSERT_TRUE(r.ok());
  const auto b = compute_billing(r.trace, r.allocation_log);
  EXPECT_GT(b.cdrs, 0u);
  EXPECT_EQ(b.resolved, b.cdrs);
  EXPECT_EQ(b.unresolvable, 0u);
  EXPECT_EQ(b.wrong, 0u);
  EXPECT_TRUE(b.totals_match());
}

TEST(Billing, StaleGutiMisattributionIsCorrected)
{
  const auto r = run(bundled("stale_guti_billing"), 1);
  ASSERT_TRUE(r.ok());
  const auto b = compute_billing(r.trace, r.allocation_log);
  EXPECT_EQ(b.resolved, b.cdrs);
  EXPECT_EQ(b.wrong, 0u);
  EXPECT_TRUE(b.totals_match());
  ASSERT_FALSE(b.misattributions.empty());
  for (const auto& m : b.misattributions) {
    EXPECT_EQ(m.corrected, m.consumer);
    EXPECT_NE(m.naive, m.consumer);
  }
}

TEST(Billing, ZeroGraceLeavesMisattributions)
{
  const auto r = run(bundled("stale_guti_billing"), 1);
  const auto b = compute_billing(r.trace, r.allocation_log, 0);
  EXPECT_GT(b.wrong + b.unresolvable, 0u);
}

TEST(Billing, EmptyLogAndNoCdrs)
{
  TraceBuilder t;
  hn::AllocationLog log;
  const auto b = compute_billing(t.trace.to_jsonl(), log.to_jsonl("0000000000000001"));
  EXPECT_EQ(b.cdrs, 0u);
  EXPECT_TRUE(b.totals_match());
}

TEST(Billing, MismatchedRunsRejected)
{
  const auto r = run(bundled("batch_interleave"), 1);
  hn::AllocationLog log;
  try {
    compute_billing(r.trace, log.to_jsonl("ffffffffffffffff"));
    ADD_FAILURE();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), ErrorCode::config_error);
  }
}

TEST(Sizing, ClosedFormNumbers)
{
  const auto half = compute_sizing(0.5, 10);
  EXPECT_DOUBLE_EQ(half.expected_tries, 2.0);
  EXPECT_DOUBLE_EQ(half.footprint, 13.0);
  EXPECT_DOUBLE_EQ(compute_sizing(0, 0).expected_tries, 1.0);
  EXPECT_DOUBLE_EQ(compute_sizing(0.9, 0).expected_tries, 10.0);
  EXPECT_DOUBLE_EQ(compute_sizing(0.2, 2.5).footprint, 5.5);
}

TEST(Sizing, EmpiricalTriesNearClosedForm)
{
  const auto r = compute_sizing(0.5, 10, 10000, 4, 3);
  ASSERT_TRUE(r.empirical_tries);
  EXPECT_NEAR(*r.empirical_tries, 2.0, 0.2);
  EXPECT_EQ(r.empirical_allocations, 10000u);
}

TEST(Sizing, OutOfRangeRejected)
{
  EXPECT_THROW(compute_sizing(1.0, 10), ProtocolError);
  EXPECT_THROW(compute_sizing(-0.1, 10), ProtocolError);
  EXPECT_THROW(compute_sizing(0.5, -1), ProtocolError);
}
