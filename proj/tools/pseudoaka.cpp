// Command-line front end: scenario runs, billing, sizing, provisioning and
// test-vector export.

#include "pseudoaka/error.hpp"
#include "pseudoaka/hn.hpp"
#include "pseudoaka/reports.hpp"
#include "pseudoaka/scenario.hpp"
#include "pseudoaka/sim.hpp"
#include "pseudoaka/vectors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace pseudoaka;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_violation = 1;
constexpr int exit_config = 2;

enum class LogLevel
{
  quiet,
  info,
  debug,
};

LogLevel
log_level()
{
  const char* env = std::getenv("PSEUDOAKA_LOG");
  if (!env) {
    return LogLevel::info;
  }
  const std::string v = env;
  if (v == "quiet" || v == "0" || v == "error") {
    return LogLevel::quiet;
  }
  if (v == "debug" || v == "2" || v == "trace") {
    return LogLevel::debug;
  }
  return LogLevel::info;
}

void
log(LogLevel level, const std::string& msg)
{
  if (log_level() >= level) {
    std::cerr << msg << "\n";
  }
}

std::string
read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ProtocolError(ErrorCode::config_error, "cannot read '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void
write_file(const std::string& path, const std::string& data)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ProtocolError(ErrorCode::config_error, "cannot write '" + path + "'");
  }
  out << data;
}

std::string
per_seed_path(const std::string& path, std::uint64_t seed, bool many)
{
  return many ? path + "." + std::to_string(seed) : path;
}

struct RunArgs
{
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string trace_out;
  std::string report_out;
  std::string log_out;
  std::size_t runs = 1;
  unsigned jobs = 1;
};

int
cmd_run(const RunArgs& a)
{
  const auto scenario = sim::load_scenario(a.scenario);
  const auto first = a.seed.value_or(scenario.seed);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.runs; i++) {
    seeds.push_back(first + i);
  }
  const bool keep = !a.trace_out.empty() || !a.log_out.empty() || log_level() == LogLevel::debug;
  log(LogLevel::info,
      "running " + scenario.name + " for " + std::to_string(seeds.size()) + " seed(s) on " + std::to_string(a.jobs) +
        " job(s)");
  const auto results = sim::run_campaign(scenario, seeds, a.jobs, sim::RunOptions{ keep });

  const bool many = results.size() > 1;
  std::string reports;
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!a.trace_out.empty()) {
      write_file(per_seed_path(a.trace_out, r.seed, many), r.trace);
    }
    if (!a.log_out.empty()) {
      write_file(per_seed_path(a.log_out, r.seed, many), r.allocation_log);
    }
    if (log_level() == LogLevel::debug) {
      std::cerr << r.trace;
    }
    reports += r.report_jsonl();
    std::cout << r.summary();
    if (many) {
      std::cout << "\n";
    }
    if (!r.ok()) {
      failed++;
    }
  }
  if (!a.report_out.empty()) {
    write_file(a.report_out, reports);
  }
  if (many) {
    std::cout << "campaign: " << results.size() - failed << "/" << results.size() << " runs without violations\n";
  }
  return failed ? exit_violation : exit_ok;
}

int
cmd_billing(const std::string& trace_path, const std::string& log_path, bool json, std::optional<SimTime> grace)
{
  const auto report = sim::compute_billing(read_file(trace_path), read_file(log_path), grace);
  if (json) {
    std::cout << report.to_json().dump(2) << "\n";
  } else {
    std::cout << report.to_text();
  }
  return exit_ok;
}

int
cmd_sizing(double occupancy, double avg_phn, std::size_t empirical, unsigned digits, std::uint64_t seed, bool json)
{
  if (!(occupancy >= 0.0 && occupancy < 1.0)) {
    throw ProtocolError(ErrorCode::config_error, "occupancy must be in [0, 1)");
  }
  const auto report = sim::compute_sizing(occupancy, avg_phn, empirical, digits, seed);
  if (json) {
    std::cout << report.to_json().dump(2) << "\n";
  } else {
    std::cout << report.to_text();
  }
  return exit_ok;
}

int
cmd_provision(std::size_t count, std::uint64_t seed, const std::string& mcc, const std::string& mnc, unsigned digits, const std::string& out)
{
  NetworkId net{ mcc, mnc };
  net.validate();
  Rng rng(seed);
  const auto keys = crypto::generate_hn_keypair(rng);
  hn::HnConfig config;
  config.network = net;
  config.pool_digits = digits;
  hn::HomeNetwork home(config, keys, rng.fork());

  hn::ProvisioningFile file;
  file.network = net;
  file.pool_digits = digits;
  file.keys = keys;
  std::set<std::uint64_t> used;
  for (std::size_t i = 0; i < count; i++) {
    std::uint64_t msin = 0;
    do {
      msin = rng.below(msin_space);
    } while (!used.insert(msin).second);
    crypto::MasterKey k;
    rng.fill(k.bytes);
    file.subscribers.push_back(home.provision(Imsi(net, msin), k));
  }
  const auto text = hn::to_json_text(file);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return exit_ok;
}

int
cmd_vectors(const std::string& dir)
{
  const auto files = vectors::generate();
  if (dir.empty()) {
    for (const auto& [name, text] : files) {
      std::cout << "## " << name << "\n" << text << "\n";
    }
    return exit_ok;
  }
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : files) {
    write_file((std::filesystem::path(dir) / name).string(), text);
  }
  log(LogLevel::info, "wrote " + std::to_string(files.size()) + " vector files to " + dir);
  return exit_ok;
}

int
cmd_drill(const std::string& path, std::optional<std::uint64_t> seed, std::size_t targets, std::optional<std::uint32_t> value, std::uint32_t offset)
{
  auto scenario = sim::load_scenario(path);
  sim::World world(scenario, seed.value_or(scenario.seed));
  targets = std::min(targets, world.ues().size());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < targets; i++) {
    idx.push_back(i);
  }
  const auto report = sim::run_resync_drill(world, idx, value, offset);
  std::cout << report.to_json().dump(2) << "\n";
  return report.ok ? exit_ok : exit_violation;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Pseudonym-based IMSI privacy: simulator and tools" };
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and check every invariant");
  run_cmd->add_option("scenario", run.scenario, "Scenario file")->required();
  run_cmd->add_option("--seed", run.seed, "Seed (defaults to the scenario's)");
  run_cmd->add_option("--trace-out", run.trace_out, "Write the JSONL trace here");
  run_cmd->add_option("--report-out", run.report_out, "Write the JSONL report here");
  run_cmd->add_option("--log-out", run.log_out, "Write the HN allocation log here");
  run_cmd->add_option("--runs", run.runs, "Consecutive seeds to run")->check(CLI::PositiveNumber);
  run_cmd->add_option("--jobs", run.jobs, "Worker threads for multi-seed runs")->check(CLI::PositiveNumber);

  std::string trace_path;
  std::string log_path;
  bool billing_json = false;
  std::optional<SimTime> grace;
  auto* billing_cmd = app.add_subcommand("billing", "Resolve the CDRs of a run against its allocation log");
  billing_cmd->add_option("trace", trace_path, "Trace from `run --trace-out`")->required();
  billing_cmd->add_option("log", log_path, "Allocation log from `run --log-out`")->required();
  billing_cmd->add_option("--grace", grace, "Seconds a GUTI may outlive its pseudonym (default: from the trace)");
  billing_cmd->add_flag("--json", billing_json, "JSON output");

  double occupancy = 0.5;
  double avg_phn = 10;
  std::size_t empirical = 0;
  unsigned digits = 4;
  std::uint64_t sizing_seed = 1;
  bool sizing_json = false;
  auto* sizing_cmd = app.add_subcommand("sizing", "Expected allocation tries and per-subscriber footprint");
  sizing_cmd->add_option("--occupancy", occupancy, "Fraction of the MSIN space in use, in [0, 1)");
  sizing_cmd->add_option("--avg-phn", avg_phn, "Average |P_HN| per subscriber");
  sizing_cmd->add_option("--empirical", empirical, "Also measure this many allocations on a simulated pool");
  sizing_cmd->add_option("--digits", digits, "Pool size 10^digits for the measurement")->check(CLI::Range(1, 8));
  sizing_cmd->add_option("--seed", sizing_seed, "Seed for the measurement");
  sizing_cmd->add_flag("--json", sizing_json, "JSON output");

  std::size_t subscribers = 10;
  std::uint64_t prov_seed = 1;
  std::string mcc = "001";
  std::string mnc = "01";
  unsigned prov_digits = 10;
  std::string prov_out;
  auto* prov_cmd = app.add_subcommand("provision", "Write a subscriber provisioning file");
  prov_cmd->add_option("--subscribers", subscribers, "Number of subscribers");
  prov_cmd->add_option("--seed", prov_seed, "Seed for keys, IMSIs and pseudonyms");
  prov_cmd->add_option("--mcc", mcc, "Mobile country code");
  prov_cmd->add_option("--mnc", mnc, "Mobile network code (2 digits)");
  prov_cmd->add_option("--pool-digits", prov_digits, "Pseudonym pool size 10^digits")->check(CLI::Range(1, 10));
  prov_cmd->add_option("--out", prov_out, "Output file (default stdout)");

  std::string vec_dir;
  auto* vec_cmd = app.add_subcommand("vectors", "Print or write the published test vectors");
  vec_cmd->add_option("--out-dir", vec_dir, "Directory to write *.hex files into");

  std::string drill_path;
  std::optional<std::uint64_t> drill_seed;
  std::size_t drill_targets = 20;
  std::optional<std::uint32_t> drill_value;
  std::uint32_t drill_offset = 1000;
  auto* drill_cmd = app.add_subcommand("drill", "Corrupt d2 on several UEs and resynchronize them over 5G");
  drill_cmd->add_option("scenario", drill_path, "Scenario providing the network layout")->required();
  drill_cmd->add_option("--seed", drill_seed, "Seed");
  drill_cmd->add_option("--targets", drill_targets, "Number of UEs to corrupt");
  drill_cmd->add_option("--value", drill_value, "Corrupted d2 (default: newest HN counter + offset)");
  drill_cmd->add_option("--offset", drill_offset, "Offset above the newest HN counter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (*run_cmd) {
      return cmd_run(run);
    }
    if (*billing_cmd) {
      return cmd_billing(trace_path, log_path, billing_json, grace);
    }
    if (*sizing_cmd) {
      return cmd_sizing(occupancy, avg_phn, empirical, digits, sizing_seed, sizing_json);
    }
    if (*prov_cmd) {
      return cmd_provision(subscribers, prov_seed, mcc, mnc, prov_digits, prov_out);
    }
    if (*vec_cmd) {
      return cmd_vectors(vec_dir);
    }
    if (*drill_cmd) {
      return cmd_drill(drill_path, drill_seed, drill_targets, drill_value, drill_offset);
    }
  } catch (const ProtocolError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool input = e.code() == ErrorCode::config_error || e.code() == ErrorCode::invalid_argument;
    return input ? exit_config : exit_violation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_violation;
  }
  return exit_ok;
}
