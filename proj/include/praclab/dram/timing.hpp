#pragma once

#include "praclab/common.hpp"

namespace praclab::dram {

// DDR5 timing constants used by the channel model. Defaults are the
// Table-3-style values of a DDR5-8000 part with PRAC timings.
struct TimingParams {
  Ns tRC = 52;
  Ns tRFMab = 350;
  Ns tRFC = 410;
  Ns tREFI = 3900;
  Ns tREFW = 8192 * 3900;
  Ns tABOACT = 180;
  Ns readLatency = 32;  // tRCD + tCL, fused into one service time

  void validate() const;
  bool operator==(const TimingParams&) const = default;
};

struct DramGeometry {
  int numBanks = 32;
  int rowsPerBank = 128 * 1024;

  void validate() const;
  bool operator==(const DramGeometry&) const = default;
};

enum class PagePolicy { Open, Closed };

// Timings with refresh pushed beyond any run of interest. Used by the
// small analytic cross-check configurations where refresh would only add
// noise to window accounting.
TimingParams noRefreshTimings(const TimingParams& base = {});

}  // namespace praclab::dram
