#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pseudoaka {

/// Simulated time in seconds.
using SimTime = std::int64_t;

using Record = nlohmann::ordered_json;

/// Receives structured trace records {t, actor, kind, fields...}.
class TraceSink
{
public:
  virtual ~TraceSink() = default;
  virtual void emit(SimTime t, std::string_view actor, std::string_view kind, Record fields) = 0;
};

/// Builds the canonical record layout: t, actor, kind first, then fields in
/// insertion order.
Record make_record(SimTime t, std::string_view actor, std::string_view kind, const Record& fields);

/// Keeps every record in memory and renders them as JSON lines.
class MemoryTrace : public TraceSink
{
public:
  void emit(SimTime t, std::string_view actor, std::string_view kind, Record fields) override;

  const std::vector<Record>& records() const { return records_; }
  std::string to_jsonl() const;
  void clear() { records_.clear(); }

private:
  std::vector<Record> records_;
};

/// Parses JSON lines; blank lines are skipped.
std::vector<Record> parse_jsonl(std::string_view text);

} // namespace pseudoaka
