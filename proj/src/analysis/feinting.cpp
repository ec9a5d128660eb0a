#include "praclab/analysis/feinting.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace praclab::analysis {

void AnalysisParams::validate() const {
  timings.validate();
  if (tbWindow <= 0) throw InvalidCall("tbWindow must be positive");
  if (rowsPerBank < 1) throw InvalidGeometry("rowsPerBank must be positive");
  if (maxActTrefw < 1 || maxActTrefw > timings.tREFW / timings.tRC)
    throw InvalidGeometry(fmt::format("maxActTrefw {} outside [1, tREFW/tRC = {}]", maxActTrefw,
                                      timings.tREFW / timings.tRC));
}

std::string_view toString(Convention c) {
  switch (c) {
    case Convention::Raw: return "raw";
    case Convention::RefreshAware: return "refresh-aware";
    case Convention::Conservative: return "conservative";
  }
  return "unknown";
}

std::int64_t actsPerWindow(Ns tbWindow, const dram::TimingParams& t, Convention convention) {
  if (tbWindow <= 0) throw InvalidCall("tbWindow must be positive");
  if (convention == Convention::Raw) return tbWindow / t.tRC;
  if (convention == Convention::Conservative) {
    const Ns busy = tbWindow - (tbWindow / t.tREFI) * t.tRFC - t.tRFMab;
    return busy <= 0 ? 0 : busy / t.tRC;
  }
  // floor((W - W/tREFI*tRFC - tRFMab) / tRC) kept in integers by scaling
  // through tREFI.
  const __int128 num = static_cast<__int128>(tbWindow) * t.tREFI - static_cast<__int128>(tbWindow) * t.tRFC -
                       static_cast<__int128>(t.tRFMab) * t.tREFI;
  if (num <= 0) return 0;
  return static_cast<std::int64_t>(num / (static_cast<__int128>(t.tREFI) * t.tRC));
}

RoundsResult feintingRounds(std::int64_t r1, std::int64_t apw, std::optional<std::int64_t> budget) {
  if (r1 < 1) throw InvalidCall("R1 must be >= 1");
  if (apw < 1) throw InvalidCall("actsPerWindow must be >= 1");
  std::int64_t sum = 0;
  std::int64_t rounds = 1;
  std::int64_t r = r1;
  while (r > 1) {
    if (budget && sum + r + apw > *budget) break;
    sum += r;
    ++rounds;
    r = r1 - sum / apw;
  }
  return {rounds, (rounds - 1) + apw};
}

FeintingOutcome tMax(const AnalysisParams& p) {
  p.validate();
  const std::int64_t apw = actsPerWindow(p.tbWindow, p.timings, p.convention);
  if (apw < 1) return {};

  if (p.resetEnabled) {
    std::int64_t r1 = p.optR1Rule == OptR1Rule::RefreshWindowIntervals ? p.timings.tREFW / p.tbWindow
                                                                       : p.maxActTrefw / apw;
    // The pool cannot hold more rows than the bank has.
    r1 = std::clamp<std::int64_t>(r1, 1, p.rowsPerBank);
    const auto r = feintingRounds(r1, apw, p.maxActTrefw);
    return {r.attackRounds, r.targetActs, r1, r.targetActs};
  }

  FeintingOutcome best;
  for (std::int64_t r1 = 1; r1 <= p.rowsPerBank; ++r1) {
    const auto r = feintingRounds(r1, apw);
    if (r.targetActs > best.tMax) best = {r.attackRounds, r.targetActs, r1, r.targetActs};
  }
  return best;
}

}  // namespace praclab::analysis
