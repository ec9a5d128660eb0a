#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "praclab/common.hpp"

namespace praclab::dram {

enum class EventType : std::uint8_t {
  Command,
  BlockStart,
  BlockEnd,
  Refresh,
  Alert,
  AboRfm,
  AcbRfm,
  TbRfm,
  TbSkip,
  TrefMitigation,
  CounterReset,
};

std::string_view toString(EventType type);

struct LogEntry {
  Ns time = 0;
  EventType type = EventType::Command;
  BankId bank = kNoBank;
  RowId row = kNoRow;
  ActorId actor = kNoActor;
  std::string detail;
};

// Entries may be recorded slightly out of time order (a block end is known
// when the block is scheduled); ordered() sorts stably by timestamp so equal
// timestamps keep their recording order.
class EventLog {
 public:
  explicit EventLog(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void setEnabled(bool on) { enabled_ = on; }

  void record(LogEntry entry) {
    if (enabled_) entries_.push_back(std::move(entry));
  }

  std::size_t size() const { return entries_.size(); }
  std::vector<LogEntry> ordered() const;
  void writeCsv(std::ostream& out) const;

 private:
  bool enabled_;
  std::vector<LogEntry> entries_;
};

inline constexpr std::string_view kEventCsvHeader = "time_ns,event,bank,row,actor,detail";

}  // namespace praclab::dram
