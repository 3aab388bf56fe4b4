#include "pseudoaka/reports.hpp"
#include "pseudoaka/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pseudoaka::sim {

namespace {

template<typename F>
void
for_each_line(std::string_view text, F&& f)
{
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      f(Record::parse(line));
    }
    start = end + 1;
  }
}

std::uint64_t
parse_value(const Record& r, const char* key)
{
  return std::stoull(r.at(key).get<std::string>());
}

std::string
format_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

} // namespace

// --- linkability -------------------------------------------------------------

bool
LinkabilityReport::ok() const
{
  return out_of_slot == 0 && noncontiguous == 0 && lte_window_violations == 0 && suci_duplicates == 0 &&
         cleartext_msin == 0 && fiveg_long_term_pages == 0;
}

Record
LinkabilityReport::to_json() const
{
  Record r;
  r["passive"] = Record{ { "observations", observations },
                         { "sessions", sessions },
                         { "pages_by_pseudonym", pages_by_pseudonym },
                         { "guti_exposures", guti_exposures } };
  r["lte_catcher"] = Record{ { "inquiries", lte_inquiries },
                             { "harvested", lte_harvested },
                             { "windows", lte_windows },
                             { "max_window", lte_max_window },
                             { "window_violations", lte_window_violations },
                             { "consecutive_overlaps", lte_consecutive_overlaps } };
  r["fiveg_catcher"] = Record{ { "harvested", suci_harvested },
                               { "duplicates", suci_duplicates },
                               { "null_scheme", null_scheme_sucis } };
  r["out_of_slot"] = out_of_slot;
  r["noncontiguous"] = noncontiguous;
  r["cleartext_msin"] = cleartext_msin;
  r["fiveg_long_term_pages"] = fiveg_long_term_pages;
  r["ok"] = ok();
  return r;
}

void
LinkabilityAssessor::close_window(UeView& ue)
{
  if (ue.window.empty()) {
    return;
  }
  report_.lte_windows++;
  report_.lte_max_window = std::max(report_.lte_max_window, ue.window.size());
  if (ue.window.size() > 2) {
    report_.lte_window_violations++;
  }
  const bool overlap = std::any_of(ue.window.begin(), ue.window.end(), [&](auto v) { return ue.previous.contains(v); });
  if (overlap) {
    report_.lte_consecutive_overlaps++;
  }
  ue.previous = std::move(ue.window);
  ue.window.clear();
}

void
LinkabilityAssessor::on_identity(const std::string& ue_name, UeView& ue, const Record& r)
{
  (void)ue_name;
  const auto sn = r.value("sn", "");
  const auto type = r.value("type", "");
  if (type == "guti") {
    if (passive_) {
      report_.guti_exposures++;
    }
    return;
  }
  const auto value = r.value("value", "");
  if (type == "suci") {
    if (fiveg_catchers_.contains(sn)) {
      report_.suci_harvested++;
      if (!sucis_.insert(value).second) {
        report_.suci_duplicates++;
      }
      if (value.size() >= 10 && value.substr(8, 2) == "00") {
        report_.null_scheme_sucis++;
      }
    }
    return;
  }
  if (type != "pseudonym" || value.size() < msin_digits) {
    return;
  }
  const auto msin = value.substr(value.size() - msin_digits);
  if (msin == ue.msin) {
    report_.cleartext_msin++;
  }
  const auto v = std::stoull(msin);
  if (v != ue.p1 && v != ue.p2) {
    report_.out_of_slot++;
  } else if (ue.left.contains(v)) {
    report_.noncontiguous++;
  }
  ue.seen.insert(v);
  if (passive_) {
    report_.observations++;
  }
  if (lte_catchers_.contains(sn)) {
    report_.lte_inquiries++;
    ue.window.insert(v);
    ue.harvested.insert(v);
  }
}

void
LinkabilityAssessor::observe(const Record& r)
{
  const auto actor = r.value("actor", "");
  const auto kind = r.value("kind", "");
  if (actor == "sim") {
    if (kind == "header") {
      for (const auto& sn : r.value("serving_networks", Record::array())) {
        if (sn.value("flavor", "") == "5g") {
          fiveg_sns_.insert(sn.value("id", ""));
        }
      }
      for (const auto& adv : r.value("adversaries", Record::array())) {
        const auto k = adv.value("kind", "");
        const auto id = adv.value("id", "");
        if (k == "passive-eavesdrop") {
          passive_ = true;
        } else if (k == "active-lte-catcher") {
          lte_catchers_.insert(id);
        } else if (k == "active-5g-catcher") {
          fiveg_catchers_.insert(id);
        }
      }
    } else if (kind == "ue-provisioned") {
      auto& ue = ues_[r.value("ue", "")];
      const auto imsi = r.value("imsi", "");
      ue.msin = imsi.substr(imsi.size() - msin_digits);
      ue.p1 = parse_value(r, "p1");
      ue.p2 = parse_value(r, "p2");
    }
    return;
  }
  if (auto it = ues_.find(actor); it != ues_.end()) {
    auto& ue = it->second;
    if (kind == "identity-response") {
      on_identity(actor, ue, r);
    } else if (kind == "pseudonym-update") {
      const auto p1 = parse_value(r, "p1");
      const auto p2 = parse_value(r, "p2");
      for (auto old : { ue.p1, ue.p2 }) {
        if (old != p1 && old != p2 && ue.seen.contains(old)) {
          ue.left.insert(old);
        }
      }
      ue.p1 = p1;
      ue.p2 = p2;
      close_window(ue);
    }
    return;
  }
  if (kind == "page") {
    const auto by = r.value("by", "");
    if (by == "pseudonym" && passive_) {
      report_.observations++;
      report_.pages_by_pseudonym++;
    }
    if (by != "guti" && fiveg_sns_.contains(actor)) {
      report_.fiveg_long_term_pages++;
    }
  }
}

LinkabilityReport
LinkabilityAssessor::finish() const
{
  auto copy = *this;
  return copy.close_all();
}

LinkabilityReport
LinkabilityAssessor::close_all()
{
  for (auto& [name, ue] : ues_) {
    close_window(ue);
    report_.lte_harvested += ue.harvested.size();
    if (passive_) {
      report_.sessions += ue.seen.size();
    }
  }
  return report_;
}

LinkabilityReport
assess_linkability(std::string_view trace_jsonl)
{
  LinkabilityAssessor a;
  for_each_line(trace_jsonl, [&](const Record& r) { a.observe(r); });
  return a.finish();
}

// --- billing -------------------------------------------------------------------

Record
BillingReport::to_json() const
{
  Record r;
  r["run_id"] = run_id;
  r["cdrs"] = cdrs;
  r["resolved"] = resolved;
  r["unresolvable"] = unresolvable;
  r["wrong"] = wrong;
  r["totals_match"] = totals_match();
  Record t = Record::object();
  for (const auto& [imsi, services] : totals) {
    for (const auto& [service, n] : services) {
      t[imsi][service] = n;
    }
  }
  r["totals"] = std::move(t);
  Record m = Record::array();
  for (const auto& x : misattributions) {
    m.push_back(Record{ { "t", x.t },
                        { "sn", x.sn },
                        { "identity", x.identity },
                        { "naive", x.naive },
                        { "corrected", x.corrected },
                        { "consumer", x.consumer } });
  }
  r["misattributions"] = std::move(m);
  r["unresolved"] = unresolved;
  return r;
}

std::string
BillingReport::to_text() const
{
  std::string out;
  out += "run " + run_id + "\n";
  out += "cdrs " + std::to_string(cdrs) + ", resolved " + std::to_string(resolved) + ", unresolvable " +
         std::to_string(unresolvable) + ", wrong " + std::to_string(wrong) + "\n";
  out += "naive misattributions corrected: " + std::to_string(misattributions.size()) + "\n";
  for (const auto& m : misattributions) {
    out += "  t=" + std::to_string(m.t) + " " + m.sn + " " + m.identity + ": " +
           (m.naive.empty() ? std::string("-") : m.naive) + " -> " + m.corrected + "\n";
  }
  out += "per-IMSI totals:\n";
  for (const auto& [imsi, services] : totals) {
    out += "  " + imsi;
    for (const auto& [service, n] : services) {
      out += " " + service + "=" + std::to_string(n);
    }
    out += "\n";
  }
  out += std::string("totals match consumed services: ") + (totals_match() ? "yes" : "no") + "\n";
  return out;
}

BillingReport
compute_billing(std::string_view trace_jsonl, std::string_view log_jsonl, std::optional<SimTime> grace)
{
  std::string log_run;
  const auto log = hn::AllocationLog::from_jsonl(log_jsonl, &log_run);

  BillingReport out;
  std::map<std::string, std::string> imsi_of;
  struct LastService
  {
    std::string ue;
    std::string sn;
    std::string service;
    SimTime t = -1;
  };
  std::optional<LastService> last;
  bool header = false;

  for_each_line(trace_jsonl, [&](const Record& r) {
    const auto actor = r.value("actor", "");
    const auto kind = r.value("kind", "");
    const SimTime t = r.value("t", SimTime{ 0 });
    if (actor == "sim" && kind == "header") {
      header = true;
      out.run_id = r.value("run_id", "");
      if (!grace) {
        grace = r.value("cdr_grace", SimTime{ 86400 });
      }
      if (out.run_id != log_run) {
        throw ProtocolError(ErrorCode::config_error,
                            "trace run " + out.run_id + " does not match allocation log run " + log_run);
      }
      return;
    }
    if (actor == "sim" && kind == "ue-provisioned") {
      imsi_of[r.value("ue", "")] = r.value("imsi", "");
      return;
    }
    if (kind == "service" && imsi_of.contains(actor)) {
      const auto service = r.value("service", "");
      out.consumed[imsi_of[actor]][service]++;
      last = LastService{ actor, r.value("sn", ""), service, t };
      return;
    }
    if (kind != "cdr") {
      return;
    }
    out.cdrs++;
    const hn::Cdr cdr{ Imsi::parse(r.value("identity", "")), actor, r.value("service", ""), t };
    std::string consumer;
    if (last && last->sn == actor && last->t == t && last->service == cdr.service) {
      consumer = imsi_of[last->ue];
    }
    last.reset();

    Imsi resolved;
    try {
      resolved = log.resolve(cdr, grace.value_or(86400));
    } catch (const ProtocolError& e) {
      if (e.code() != ErrorCode::unresolvable_cdr) {
        throw;
      }
      out.unresolvable++;
      out.unresolved.push_back(cdr.identity.to_string() + "@" + actor + "@" + std::to_string(t));
      return;
    }
    out.resolved++;
    const auto corrected = resolved.to_string();
    out.totals[corrected][cdr.service]++;
    if (corrected != consumer) {
      out.wrong++;
    }
    const auto naive = log.resolve_by_interval(cdr);
    const auto naive_s = naive ? naive->to_string() : std::string();
    if (naive_s != corrected) {
      out.misattributions.push_back(Misattribution{ t, actor, cdr.identity.to_string(), naive_s, corrected, consumer });
    }
  });
  if (!header && !trace_jsonl.empty()) {
    throw ProtocolError(ErrorCode::config_error, "trace has no header record");
  }
  if (!header && !log_run.empty()) {
    out.run_id = log_run;
  }
  return out;
}

// --- sizing --------------------------------------------------------------------

Record
SizingReport::to_json() const
{
  Record r;
  r["occupancy"] = occupancy;
  r["expected_tries"] = expected_tries;
  r["avg_phn"] = avg_phn;
  r["footprint"] = footprint;
  if (empirical_tries) {
    r["empirical_tries"] = *empirical_tries;
    r["empirical_allocations"] = empirical_allocations;
  }
  return r;
}

std::string
SizingReport::to_text() const
{
  std::string out;
  out += "occupancy        " + format_double(occupancy) + "\n";
  out += "expected tries   " + format_double(expected_tries) + "\n";
  out += "avg |P_HN|       " + format_double(avg_phn) + "\n";
  out += "footprint factor " + format_double(footprint) + "\n";
  if (empirical_tries) {
    out += "empirical tries  " + format_double(*empirical_tries) + " over " + std::to_string(empirical_allocations) +
           " allocations\n";
  }
  return out;
}

SizingReport
compute_sizing(double occupancy, double avg_phn, std::size_t allocations, unsigned digits, std::uint64_t seed)
{
  if (!(occupancy >= 0.0 && occupancy < 1.0)) {
    throw ProtocolError(ErrorCode::invalid_argument, "occupancy must be in [0, 1)");
  }
  if (!(avg_phn >= 0.0)) {
    throw ProtocolError(ErrorCode::invalid_argument, "avg_phn must be non-negative");
  }
  SizingReport out;
  out.occupancy = occupancy;
  out.expected_tries = 1.0 / (1.0 - occupancy);
  out.avg_phn = avg_phn;
  out.footprint = avg_phn + 3.0;

  if (allocations > 0) {
    hn::PseudonymPool pool(digits);
    Rng rng(seed);
    const auto target = static_cast<std::size_t>(std::llround(occupancy * static_cast<double>(pool.space())));
    if (target >= pool.space()) {
      throw ProtocolError(ErrorCode::invalid_argument, "occupancy leaves no free value in the pool");
    }
    while (pool.allocated_count() < target) {
      pool.allocate(0, rng);
    }
    std::uint64_t tries = 0;
    for (std::size_t i = 0; i < allocations; i++) {
      const auto a = pool.allocate(1, rng);
      tries += a.tries;
      pool.release(a.value);
    }
    out.empirical_tries = static_cast<double>(tries) / static_cast<double>(allocations);
    out.empirical_allocations = allocations;
  }
  return out;
}

} // namespace pseudoaka::sim
