#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "praclab/common.hpp"
#include "praclab/dram/channel.hpp"

namespace praclab::prac {

enum class ResetPolicy { PerTrefw, OnMitigationOnly };
enum class QueuePolicy { SingleEntryFrequency, UpracOracle };

struct PracConfig {
  std::uint32_t nBO = 1024;
  int nMit = 1;
  int aboAct = 3;
  std::optional<std::uint32_t> bat;
  ResetPolicy resetPolicy = ResetPolicy::PerTrefw;
  QueuePolicy queuePolicy = QueuePolicy::SingleEntryFrequency;
  bool aboEnabled = true;
  // TREF co-design: mitigate at every P-th refresh (P in tREFI units).
  std::optional<int> trefPeriod;

  int aboDelay() const { return nMit; }
  void validate() const;
};

struct MitigationQueueEntry {
  RowId row = kNoRow;
  std::uint32_t count = 0;
  bool operator==(const MitigationQueueEntry&) const = default;
};

enum class RfmCause : std::uint8_t { Abo, Acb, TimingBased, Tref };

std::string_view toString(RfmCause cause);

struct MitigationEvent {
  Ns time = 0;
  RfmCause cause = RfmCause::Abo;
  BankId bank = kNoBank;
  RowId row = kNoRow;
  std::uint32_t previousCount = 0;
};

enum class ActivationOutcome { NoAlert, AlertAsserted };
enum class AcbStatus { NotDue, AcbRfmDue };

// Victim refreshes per mitigated row, plus the activation that rewrites
// the row's counter.
inline constexpr int kVictimRefreshesPerMitigation = 4;
inline constexpr int kRowOpsPerMitigation = kVictimRefreshesPerMitigation + 1;

struct AboController {
  bool alertPending = false;
  bool burstRequested = false;
  int postAlertActs = 0;
  int suppressedActs = 0;
  BankId alertBank = kNoBank;
  RowId alertRow = kNoRow;
  Ns alertTime = 0;
  std::uint64_t burstId = 0;
};

struct AboBurst {
  Ns alertTime = 0;
  BankId bank = kNoBank;
  RowId row = kNoRow;
  Ns firstBlockStart = 0;
  Ns lastBlockEnd = 0;
  int postAlertActs = 0;
};

struct ActivationInfo {
  BankId bank;
  RowId row;
  ActorId actor;
  Ns time;
  std::uint32_t count;  // counter value after the increment
};

// Per-row activation counters, alert back-off, mitigation queues, ACB-RFM
// and TREF handling for one channel.
class PracEngine : public dram::ChannelListener {
 public:
  PracEngine(PracConfig config, dram::DramGeometry geometry);

  // Registers as a channel listener. The engine drives ABO bursts and
  // ACB-RFMs on this channel.
  void attach(dram::Channel& channel);

  const PracConfig& config() const { return config_; }

  // Counter/queue/BAT update for one performed activation. Does not touch
  // the channel; attach() wires this to precharge completion.
  ActivationOutcome onActivation(BankId bank, RowId row);
  AcbStatus acbCheck(BankId bank) const;
  // Mitigates the policy-selected row of every bank.
  std::vector<MitigationEvent> performRfm(Ns now, RfmCause cause);
  void resetCounters(Ns now);
  std::vector<MitigationEvent> onTref(Ns now);

  std::uint32_t counter(BankId bank, RowId row) const { return counters_[index(bank, row)]; }
  std::optional<MitigationQueueEntry> queueEntry(BankId bank) const;
  // Row the queue policy would mitigate in `bank` right now.
  std::optional<MitigationQueueEntry> selection(BankId bank) const;
  std::uint32_t batCounter(BankId bank) const { return bat_[bank]; }
  const AboController& abo() const { return abo_; }

  std::uint64_t alerts() const { return alerts_; }
  std::uint64_t rfmCount(RfmCause cause) const { return rfmByCause_[static_cast<int>(cause)]; }
  std::uint64_t victimRefreshes() const { return victimRefreshes_; }
  std::uint64_t extraRowOps() const { return extraRowOps_; }
  std::uint32_t maxCounterSeen() const { return maxCounter_; }
  const std::vector<MitigationEvent>& mitigations() const { return mitigations_; }
  const std::vector<AboBurst>& aboBursts() const { return bursts_; }
  const std::vector<Ns>& alertTimes() const { return alertTimes_; }
  void setKeepMitigationHistory(bool keep) { keepHistory_ = keep; }

  // Observers for the tprac scheduler and analysis drivers.
  std::function<void(Ns)> trefObserver;
  std::function<void(const ActivationInfo&)> activationObserver;
  std::function<void(const MitigationEvent&)> mitigationObserver;

  // ChannelListener
  void onActivationStart(dram::Channel&, const dram::MemRequest&, Ns start) override;
  void onActivation(dram::Channel&, BankId, RowId, ActorId, Ns at) override;
  void onBlockStart(dram::Channel&, dram::BlockKind, Ns at, std::uint64_t tag) override;
  void onRefreshWindow(dram::Channel&, Ns at, std::uint64_t index) override;

 private:
  std::size_t index(BankId bank, RowId row) const {
    return static_cast<std::size_t>(bank) * static_cast<std::size_t>(rows_) + static_cast<std::size_t>(row);
  }
  void mitigate(BankId bank, RowId row, Ns now, RfmCause cause, std::vector<MitigationEvent>& out);
  void setCounter(BankId bank, RowId row, std::uint32_t value);
  void requestAboBurst(dram::Channel& channel);
  void log(dram::LogEntry entry);

  struct OracleOrder {
    bool operator()(const std::pair<std::uint32_t, RowId>& a, const std::pair<std::uint32_t, RowId>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };

  PracConfig config_;
  int banks_;
  int rows_;
  dram::Channel* channel_ = nullptr;
  std::vector<std::uint32_t> counters_;
  std::vector<std::size_t> touched_;
  std::vector<std::optional<MitigationQueueEntry>> queue_;
  std::vector<std::set<std::pair<std::uint32_t, RowId>, OracleOrder>> oracle_;
  std::vector<std::uint32_t> bat_;
  bool acbPending_ = false;
  AboController abo_;
  std::uint64_t alerts_ = 0;
  std::uint64_t rfmByCause_[4] = {0, 0, 0, 0};
  std::uint64_t victimRefreshes_ = 0;
  std::uint64_t extraRowOps_ = 0;
  std::uint32_t maxCounter_ = 0;
  bool keepHistory_ = true;
  std::vector<MitigationEvent> mitigations_;
  std::vector<AboBurst> bursts_;
  std::vector<Ns> alertTimes_;
};

}  // namespace praclab::prac
