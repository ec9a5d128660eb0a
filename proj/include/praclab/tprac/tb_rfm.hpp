#pragma once

#include <cstdint>
#include <vector>

#include "praclab/analysis/feinting.hpp"
#include "praclab/common.hpp"
#include "praclab/dram/channel.hpp"
#include "praclab/prac/prac_engine.hpp"

namespace praclab::tprac {

inline constexpr int kIntervalRegisterBits = 24;

struct TbRfmSchedule {
  Ns tbWindow = 0;
  Ns nextDeadline = 0;
  bool trefSkipEnabled = false;
  int intervalRegisterBits = kIntervalRegisterBits;
};

enum class DeadlineOutcome { TbRfmIssued, Skipped };

// Issues an all-bank RFM every tbWindow of wall-clock time, whatever the
// memory traffic looks like. Deadlines are k·tbWindow from t = 0.
class TbRfmScheduler {
 public:
  TbRfmScheduler(Ns tbWindow, bool trefSkipEnabled);

  // Hooks the first deadline into the channel and subscribes to TREF
  // notifications from the engine.
  void attach(dram::Channel& channel, prac::PracEngine& engine);

  // Handle the deadline at channel.clock() == nextDeadline.
  DeadlineOutcome onDeadline(dram::Channel& channel);

  const TbRfmSchedule& schedule() const { return schedule_; }
  std::uint64_t issued() const { return issued_; }
  std::uint64_t skipped() const { return skipped_; }
  // Start times of the TB-RFM blocks, in issue order.
  const std::vector<Ns>& issueTimes() const { return issueTimes_; }

 private:
  void arm(dram::Channel& channel);

  TbRfmSchedule schedule_;
  Ns lastTref_ = -1;
  bool sawTref_ = false;
  std::uint64_t issued_ = 0;
  std::uint64_t skipped_ = 0;
  std::vector<Ns> issueTimes_;
};

// Largest window on the 0.05·tREFI grid whose worst-case target count stays
// below nBO.
Ns configureFromAnalysis(std::uint32_t nBO, const dram::TimingParams& timings, bool resetEnabled,
                         analysis::Convention convention, std::int64_t rowsPerBank = 128 * 1024,
                         std::int64_t maxActTrefw = analysis::kDefaultMaxActTrefw);

// Grid step used by the window search.
Ns windowStep(const dram::TimingParams& timings);

double bandwidthLoss(Ns tbWindow, const dram::TimingParams& timings);

}  // namespace praclab::tprac
