#include "praclab/prac/prac_engine.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace praclab::prac {

using dram::BlockKind;
using dram::EventType;

void PracConfig::validate() const {
  if (nMit != 1 && nMit != 2 && nMit != 4) throw InvalidGeometry(fmt::format("nMit must be 1, 2 or 4 (got {})", nMit));
  if (nBO < 1) throw InvalidGeometry("nBO must be positive");
  if (aboAct < 0) throw InvalidGeometry("aboAct must be non-negative");
  if (bat && (*bat == 0 || *bat >= nBO))
    throw InvalidGeometry(fmt::format("bat must be in [1, nBO) (got {}, nBO {})", *bat, nBO));
  if (trefPeriod && *trefPeriod < 1) throw InvalidGeometry("trefPeriod must be >= 1");
}

std::string_view toString(RfmCause cause) {
  switch (cause) {
    case RfmCause::Abo: return "abo_rfm";
    case RfmCause::Acb: return "acb_rfm";
    case RfmCause::TimingBased: return "tb_rfm";
    case RfmCause::Tref: return "tref_mitigation";
  }
  return "unknown";
}

namespace {
EventType eventFor(RfmCause cause) {
  switch (cause) {
    case RfmCause::Abo: return EventType::AboRfm;
    case RfmCause::Acb: return EventType::AcbRfm;
    case RfmCause::TimingBased: return EventType::TbRfm;
    case RfmCause::Tref: return EventType::TrefMitigation;
  }
  return EventType::AboRfm;
}
}  // namespace

PracEngine::PracEngine(PracConfig config, dram::DramGeometry geometry)
    : config_(config), banks_(geometry.numBanks), rows_(geometry.rowsPerBank) {
  config_.validate();
  geometry.validate();
  counters_.assign(static_cast<std::size_t>(banks_) * static_cast<std::size_t>(rows_), 0);
  queue_.assign(static_cast<std::size_t>(banks_), std::nullopt);
  if (config_.queuePolicy == QueuePolicy::UpracOracle) oracle_.resize(static_cast<std::size_t>(banks_));
  bat_.assign(static_cast<std::size_t>(banks_), 0);
  abo_.suppressedActs = config_.aboDelay();
}

void PracEngine::attach(dram::Channel& channel) {
  if (channel.geometry().numBanks != banks_ || channel.geometry().rowsPerBank != rows_)
    throw InvalidGeometry("PRAC engine geometry does not match the channel");
  channel_ = &channel;
  channel.addListener(this);
}

void PracEngine::log(dram::LogEntry entry) {
  if (channel_) channel_->log().record(std::move(entry));
}

void PracEngine::setCounter(BankId bank, RowId row, std::uint32_t value) {
  const std::size_t i = index(bank, row);
  const std::uint32_t old = counters_[i];
  if (!oracle_.empty()) {
    auto& s = oracle_[bank];
    if (old > 0) s.erase({old, row});
    if (value > 0) s.insert({value, row});
  }
  if (old == 0 && value > 0) touched_.push_back(i);
  counters_[i] = value;
  maxCounter_ = std::max(maxCounter_, value);
}

ActivationOutcome PracEngine::onActivation(BankId bank, RowId row) {
  const std::uint32_t c = counters_[index(bank, row)] + 1;
  setCounter(bank, row, c);

  auto& q = queue_[bank];
  if (!q || q->row == row) {
    q = MitigationQueueEntry{row, c};
  } else if (c > q->count) {
    q = MitigationQueueEntry{row, c};
  }

  if (config_.bat) ++bat_[bank];
  if (abo_.suppressedActs < config_.aboDelay()) ++abo_.suppressedActs;

  if (config_.aboEnabled && c >= config_.nBO && !abo_.alertPending &&
      abo_.suppressedActs >= config_.aboDelay()) {
    abo_.alertPending = true;
    abo_.burstRequested = false;
    abo_.postAlertActs = 0;
    abo_.alertBank = bank;
    abo_.alertRow = row;
    ++abo_.burstId;
    ++alerts_;
    return ActivationOutcome::AlertAsserted;
  }
  return ActivationOutcome::NoAlert;
}

AcbStatus PracEngine::acbCheck(BankId bank) const {
  if (!config_.bat) return AcbStatus::NotDue;
  return bat_[bank] >= *config_.bat ? AcbStatus::AcbRfmDue : AcbStatus::NotDue;
}

std::optional<MitigationQueueEntry> PracEngine::queueEntry(BankId bank) const { return queue_[bank]; }

std::optional<MitigationQueueEntry> PracEngine::selection(BankId bank) const {
  if (config_.queuePolicy == QueuePolicy::UpracOracle) {
    const auto& s = oracle_[bank];
    if (s.empty()) return std::nullopt;
    return MitigationQueueEntry{s.begin()->second, s.begin()->first};
  }
  return queue_[bank];
}

void PracEngine::mitigate(BankId bank, RowId row, Ns now, RfmCause cause, std::vector<MitigationEvent>& out) {
  const MitigationEvent ev{now, cause, bank, row, counter(bank, row)};
  setCounter(bank, row, 0);
  queue_[bank].reset();
  victimRefreshes_ += kVictimRefreshesPerMitigation;
  extraRowOps_ += kRowOpsPerMitigation;
  if (keepHistory_) mitigations_.push_back(ev);
  log({now, eventFor(cause), bank, row, kNoActor, fmt::format("prev={}", ev.previousCount)});
  if (mitigationObserver) mitigationObserver(ev);
  out.push_back(ev);
}

std::vector<MitigationEvent> PracEngine::performRfm(Ns now, RfmCause cause) {
  std::vector<MitigationEvent> out;
  for (BankId b = 0; b < banks_; ++b) {
    if (auto sel = selection(b); sel && sel->count > 0) mitigate(b, sel->row, now, cause, out);
  }
  std::fill(bat_.begin(), bat_.end(), 0);
  ++rfmByCause_[static_cast<int>(cause)];
  return out;
}

std::vector<MitigationEvent> PracEngine::onTref(Ns now) {
  std::vector<MitigationEvent> out;
  if (!config_.trefPeriod) return out;
  for (BankId b = 0; b < banks_; ++b) {
    if (auto sel = selection(b); sel && sel->count > 0) mitigate(b, sel->row, now, RfmCause::Tref, out);
  }
  ++rfmByCause_[static_cast<int>(RfmCause::Tref)];
  if (trefObserver) trefObserver(now);
  return out;
}

void PracEngine::resetCounters(Ns now) {
  if (config_.resetPolicy != ResetPolicy::PerTrefw)
    throw InvalidCall("counter reset requested under the OnMitigationOnly policy");
  for (std::size_t i : touched_) counters_[i] = 0;
  touched_.clear();
  for (auto& q : queue_) q.reset();
  for (auto& s : oracle_) s.clear();
  std::fill(bat_.begin(), bat_.end(), 0);
  log({now, EventType::CounterReset, kNoBank, kNoRow, kNoActor, ""});
}

void PracEngine::requestAboBurst(dram::Channel& channel) {
  abo_.burstRequested = true;
  AboBurst burst{abo_.alertTime, abo_.alertBank, abo_.alertRow, 0, 0, abo_.postAlertActs};
  for (int i = 0; i < config_.nMit; ++i) {
    const Ns start = channel.blockChannel(channel.timings().tRFMab, BlockKind::AboRfm, static_cast<std::uint64_t>(i));
    if (i == 0) burst.firstBlockStart = start;
    burst.lastBlockEnd = start + channel.timings().tRFMab;
  }
  bursts_.push_back(burst);
}

void PracEngine::onActivationStart(dram::Channel& channel, const dram::MemRequest&, Ns) {
  if (!abo_.alertPending || abo_.burstRequested) return;
  if (++abo_.postAlertActs >= config_.aboAct) requestAboBurst(channel);
}

void PracEngine::onActivation(dram::Channel& channel, BankId bank, RowId row, ActorId actor, Ns at) {
  const ActivationOutcome outcome = onActivation(bank, row);
  if (activationObserver) activationObserver({bank, row, actor, at, counter(bank, row)});

  if (outcome == ActivationOutcome::AlertAsserted) {
    abo_.alertTime = at;
    alertTimes_.push_back(at);
    log({at, EventType::Alert, bank, row, actor, fmt::format("count={}", counter(bank, row))});
    if (config_.aboAct == 0) {
      requestAboBurst(channel);
    } else {
      const std::uint64_t id = abo_.burstId;
      channel.scheduleAt(at + channel.timings().tABOACT, [this, id](dram::Channel& ch, Ns) {
        if (abo_.alertPending && !abo_.burstRequested && abo_.burstId == id) requestAboBurst(ch);
      });
    }
  }

  if (config_.bat && !acbPending_ && acbCheck(bank) == AcbStatus::AcbRfmDue) {
    acbPending_ = true;
    channel.blockChannel(channel.timings().tRFMab, BlockKind::AcbRfm);
  }
}

void PracEngine::onBlockStart(dram::Channel&, BlockKind kind, Ns at, std::uint64_t tag) {
  switch (kind) {
    case BlockKind::Refresh:
      if (config_.trefPeriod && tag % static_cast<std::uint64_t>(*config_.trefPeriod) == 0) onTref(at);
      break;
    case BlockKind::AboRfm:
      performRfm(at, RfmCause::Abo);
      if (tag + 1 == static_cast<std::uint64_t>(config_.nMit)) {
        abo_.alertPending = false;
        abo_.burstRequested = false;
        abo_.suppressedActs = 0;
      }
      break;
    case BlockKind::AcbRfm:
      performRfm(at, RfmCause::Acb);
      acbPending_ = false;
      break;
    case BlockKind::TbRfm:
      performRfm(at, RfmCause::TimingBased);
      break;
  }
}

void PracEngine::onRefreshWindow(dram::Channel&, Ns at, std::uint64_t) {
  if (config_.resetPolicy == ResetPolicy::PerTrefw) resetCounters(at);
}

}  // namespace praclab::prac
