#include "pseudoaka/trace.hpp"

#include <stdexcept>

namespace pseudoaka {

Record
make_record(SimTime t, std::string_view actor, std::string_view kind, const Record& fields)
{
  Record r;
  r["t"] = t;
  r["actor"] = std::string(actor);
  r["kind"] = std::string(kind);
  if (fields.is_object()) {
    for (const auto& [key, value] : fields.items()) {
      if (key == "t" || key == "actor" || key == "kind") {
        throw std::logic_error("trace field '" + key + "' would shadow the record header");
      }
      r[key] = value;
    }
  }
  return r;
}

void
MemoryTrace::emit(SimTime t, std::string_view actor, std::string_view kind, Record fields)
{
  records_.push_back(make_record(t, actor, kind, fields));
}

std::string
MemoryTrace::to_jsonl() const
{
  std::string out;
  for (const auto& r : records_) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<Record>
parse_jsonl(std::string_view text)
{
  std::vector<Record> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    const auto line = text.substr(start, end - start);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      out.push_back(Record::parse(line));
    }
    start = end + 1;
  }
  return out;
}

} // namespace pseudoaka
