#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "praclab/common.hpp"
#include "praclab/dram/timing.hpp"

namespace praclab::analysis {

// Raw: floor(W / tRC). RefreshAware: also subtracts the average refresh
// time falling in the window and the TB-RFM itself. Conservative: subtracts
// only the refreshes every window of length W is guaranteed to contain, so
// no real window admits more activations.
enum class Convention { Raw, RefreshAware, Conservative };

std::string_view toString(Convention c);

// RefreshWindowIntervals: OPT_R1 = number of TB-Windows per tREFW.
// ActivationBudget: OPT_R1 = maxActTrefw / actsPerWindow.
enum class OptR1Rule { RefreshWindowIntervals, ActivationBudget };

inline constexpr std::int64_t kDefaultMaxActTrefw = 550'000;

struct AnalysisParams {
  Ns tbWindow = 3900;
  dram::TimingParams timings{};
  std::int64_t rowsPerBank = 128 * 1024;
  std::int64_t maxActTrefw = kDefaultMaxActTrefw;
  bool resetEnabled = true;
  Convention convention = Convention::RefreshAware;
  OptR1Rule optR1Rule = OptR1Rule::RefreshWindowIntervals;

  void validate() const;
};

struct RoundsResult {
  std::int64_t attackRounds = 0;
  std::int64_t targetActs = 0;
};

struct FeintingOutcome {
  std::int64_t attackRounds = 0;
  std::int64_t targetActs = 0;
  std::int64_t optR1 = 0;
  std::int64_t tMax = 0;
};

std::int64_t actsPerWindow(Ns tbWindow, const dram::TimingParams& timings, Convention convention);

// Decoy-pool shrinkage: R_N = R1 - floor(sum_{i<N} R_i / apw) until R_N <= 1.
// With a budget, rounds also stop once the next round plus the final
// hammering window would exceed it.
RoundsResult feintingRounds(std::int64_t r1, std::int64_t apw, std::optional<std::int64_t> budget = std::nullopt);

FeintingOutcome tMax(const AnalysisParams& params);

}  // namespace praclab::analysis
