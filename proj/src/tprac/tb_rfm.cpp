#include "praclab/tprac/tb_rfm.hpp"

#include <fmt/format.h>

namespace praclab::tprac {

TbRfmScheduler::TbRfmScheduler(Ns tbWindow, bool trefSkipEnabled) {
  if (tbWindow <= 0) throw InvalidGeometry(fmt::format("TB-Window must be positive (got {})", tbWindow));
  if (tbWindow >= (Ns{1} << kIntervalRegisterBits))
    throw InvalidGeometry(fmt::format("TB-Window {} ns does not fit the {}-bit interval register", tbWindow,
                                      kIntervalRegisterBits));
  schedule_.tbWindow = tbWindow;
  schedule_.nextDeadline = tbWindow;
  schedule_.trefSkipEnabled = trefSkipEnabled;
}

void TbRfmScheduler::attach(dram::Channel& channel, prac::PracEngine& engine) {
  if (channel.clock() > 0) throw InvalidCall("TB-RFM scheduler must be attached at t = 0");
  engine.trefObserver = [this](Ns at) {
    lastTref_ = at;
    sawTref_ = true;
  };
  arm(channel);
}

void TbRfmScheduler::arm(dram::Channel& channel) {
  channel.addFence(schedule_.nextDeadline);
  channel.scheduleAt(schedule_.nextDeadline, [this](dram::Channel& ch, Ns) { onDeadline(ch); });
}

DeadlineOutcome TbRfmScheduler::onDeadline(dram::Channel& channel) {
  const Ns deadline = schedule_.nextDeadline;
  const Ns w = schedule_.tbWindow;
  channel.releaseFence(deadline);
  DeadlineOutcome outcome;
  if (schedule_.trefSkipEnabled && sawTref_ && lastTref_ > deadline - w && lastTref_ <= deadline) {
    ++skipped_;
    channel.log().record({deadline, dram::EventType::TbSkip, kNoBank, kNoRow, kNoActor, ""});
    outcome = DeadlineOutcome::Skipped;
  } else {
    issueTimes_.push_back(channel.blockChannel(channel.timings().tRFMab, dram::BlockKind::TbRfm));
    ++issued_;
    outcome = DeadlineOutcome::TbRfmIssued;
  }
  schedule_.nextDeadline = deadline + w;
  arm(channel);
  return outcome;
}

Ns windowStep(const dram::TimingParams& timings) { return (timings.tREFI + 10) / 20; }

Ns configureFromAnalysis(std::uint32_t nBO, const dram::TimingParams& timings, bool resetEnabled,
                         analysis::Convention convention, std::int64_t rowsPerBank, std::int64_t maxActTrefw) {
  timings.validate();
  const Ns step = windowStep(timings);
  analysis::AnalysisParams p;
  p.timings = timings;
  p.rowsPerBank = rowsPerBank;
  p.maxActTrefw = maxActTrefw;
  p.resetEnabled = resetEnabled;
  p.convention = convention;

  Ns best = 0;
  for (Ns w = step; w < (Ns{1} << kIntervalRegisterBits) && w <= timings.tREFW; w += step) {
    if (w <= timings.tRFMab || analysis::actsPerWindow(w, timings, convention) < 1) continue;
    p.tbWindow = w;
    if (analysis::tMax(p).tMax < static_cast<std::int64_t>(nBO)) {
      best = w;
    } else {
      break;
    }
  }
  if (best == 0) throw NoSafeWindow(fmt::format("no TB-Window keeps the target below nBO = {}", nBO));
  return best;
}

double bandwidthLoss(Ns tbWindow, const dram::TimingParams& timings) {
  if (tbWindow <= timings.tRFMab)
    throw DegenerateWindow(fmt::format("TB-Window {} ns is not longer than tRFMab {} ns", tbWindow, timings.tRFMab));
  return static_cast<double>(timings.tRFMab) / static_cast<double>(tbWindow);
}

}  // namespace praclab::tprac
