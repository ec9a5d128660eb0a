#include "praclab/dram/event_log.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace praclab::dram {

std::string_view toString(EventType type) {
  switch (type) {
    case EventType::Command: return "cmd";
    case EventType::BlockStart: return "block_start";
    case EventType::BlockEnd: return "block_end";
    case EventType::Refresh: return "ref";
    case EventType::Alert: return "alert";
    case EventType::AboRfm: return "abo_rfm";
    case EventType::AcbRfm: return "acb_rfm";
    case EventType::TbRfm: return "tb_rfm";
    case EventType::TbSkip: return "tb_skip";
    case EventType::TrefMitigation: return "tref_mitigation";
    case EventType::CounterReset: return "counter_reset";
  }
  return "unknown";
}

std::vector<LogEntry> EventLog::ordered() const {
  std::vector<LogEntry> out = entries_;
  std::stable_sort(out.begin(), out.end(), [](const LogEntry& a, const LogEntry& b) { return a.time < b.time; });
  return out;
}

void EventLog::writeCsv(std::ostream& out) const {
  out << kEventCsvHeader << '\n';
  auto id = [](std::int64_t v) { return v < 0 ? std::string() : std::to_string(v); };
  for (const auto& e : ordered()) {
    out << fmt::format("{},{},{},{},{},{}\n", e.time, toString(e.type), id(e.bank), id(e.row), id(e.actor),
                       e.detail);
  }
}

}  // namespace praclab::dram
