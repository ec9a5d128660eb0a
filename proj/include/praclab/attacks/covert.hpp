#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "praclab/attacks/setup.hpp"

namespace praclab::attacks {

enum class CovertMode { ActivityBased, ActivationCountBased };

std::string_view toString(CovertMode m);

struct CovertConfig {
  CovertMode mode = CovertMode::ActivityBased;
  std::uint32_t nBO = 256;
  std::optional<Ns> windowNs;  // nullopt = smallest window that always fits a symbol
  std::vector<bool> payload;
  BankId senderBank = 1;
  BankId receiverBank = 0;
  RowId sharedRow = 7;  // count-based channel, in receiverBank
};

struct CovertResult {
  std::vector<bool> decodedPayload;
  Ns symbolPeriodNs = 0;
  int bitsPerSymbol = 1;
  double bitrateBps = 0;
  double errorRate = 0;
  std::size_t bitErrors = 0;
  std::size_t decodeFailures = 0;
  std::uint64_t alerts = 0;
  Ns threshold = 0;
  // Count-based only: symbol values sent and receiver accesses up to the
  // spike (-1 when none) per symbol.
  std::vector<std::uint32_t> symbols;
  std::vector<std::int64_t> receiverAccesses;
};

// Analytic periods: nBO·tRC + tRFMab and 2·nBO·tRC + tRFMab.
Ns analyticSymbolPeriod(CovertMode mode, std::uint32_t nBO, const dram::TimingParams& t);

// Window that fits one symbol under worst-case refresh interference for
// this simulator's sender and receiver.
Ns symbolWindow(CovertMode mode, std::uint32_t nBO, int nMit, const dram::TimingParams& t);

int bitsPerSymbol(CovertMode mode, std::uint32_t nBO);

// Count-based sender activations for a symbol, given the one residual
// activation the receiver leaves on the shared row.
std::uint32_t countSenderActivations(std::uint32_t symbol, std::uint32_t nBO);

// Runs sender and receiver concurrently on one channel and decodes.
// The setup's nBO is overridden by cfg.nBO.
CovertResult runCovertChannel(const CovertConfig& cfg, const AttackSetup& setup);

}  // namespace praclab::attacks
