#include "praclab/dram/timing.hpp"

#include <fmt/format.h>

namespace praclab::dram {

void TimingParams::validate() const {
  auto positive = [](Ns v, const char* name) {
    if (v <= 0) throw InvalidGeometry(fmt::format("{} must be positive (got {})", name, v));
  };
  positive(tRC, "tRC");
  positive(tRFMab, "tRFMab");
  positive(tRFC, "tRFC");
  positive(tREFI, "tREFI");
  positive(tREFW, "tREFW");
  positive(tABOACT, "tABOACT");
  positive(readLatency, "readLatency");
  if (tREFW % tREFI != 0)
    throw InvalidGeometry(fmt::format("tREFW ({}) is not a multiple of tREFI ({})", tREFW, tREFI));
  if (tRFC >= tREFI) throw InvalidGeometry(fmt::format("tRFC ({}) must be below tREFI ({})", tRFC, tREFI));
  if (tRFMab >= tREFI)
    throw InvalidGeometry(fmt::format("tRFMab ({}) must be below tREFI ({})", tRFMab, tREFI));
  if (readLatency > tRC)
    throw InvalidGeometry(fmt::format("readLatency ({}) exceeds tRC ({})", readLatency, tRC));
}

void DramGeometry::validate() const {
  if (numBanks < 2) throw InvalidGeometry(fmt::format("numBanks must be >= 2 (got {})", numBanks));
  if (rowsPerBank < 16) throw InvalidGeometry(fmt::format("rowsPerBank must be >= 16 (got {})", rowsPerBank));
}

TimingParams noRefreshTimings(const TimingParams& base) {
  TimingParams t = base;
  t.tREFI = Ns{1} << 50;
  t.tREFW = t.tREFI;
  return t;
}

}  // namespace praclab::dram
