#include "praclab/dram/channel.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace praclab::dram {

namespace {
// Ordering of internal events that share a timestamp.
constexpr std::uint8_t kPrioReport = 0;
constexpr std::uint8_t kPrioBlock = 1;
constexpr std::uint8_t kPrioRefresh = 2;
constexpr std::uint8_t kPrioWindow = 3;
constexpr std::uint8_t kPrioTimer = 4;
}  // namespace

std::string_view toString(BlockKind kind) {
  switch (kind) {
    case BlockKind::Refresh: return "ref";
    case BlockKind::AboRfm: return "abo_rfm";
    case BlockKind::AcbRfm: return "acb_rfm";
    case BlockKind::TbRfm: return "tb_rfm";
  }
  return "unknown";
}

Channel::Channel(TimingParams timings, DramGeometry geometry, PagePolicy policy, bool logEvents)
    : timings_(timings), geometry_(geometry), policy_(policy), log_(logEvents) {
  timings_.validate();
  geometry_.validate();
  banks_.resize(static_cast<std::size_t>(geometry_.numBanks));
  nextRefresh_ = timings_.tREFI;
  push({timings_.tREFI, kPrioRefresh, 0, Kind::Refresh, kNoBank, kNoRow, kNoActor, BlockKind::Refresh, 0});
  push({timings_.tREFW, kPrioWindow, 0, Kind::RefreshWindow, kNoBank, kNoRow, kNoActor, BlockKind::Refresh, 0});
}

void Channel::push(Pending p) {
  p.seq = seq_++;
  queue_.push(p);
}

void Channel::checkRequest(const MemRequest& req) const {
  if (req.bank < 0 || req.bank >= geometry_.numBanks)
    throw InvalidRequest(fmt::format("bank {} out of range [0, {})", req.bank, geometry_.numBanks));
  if (req.row < 0 || req.row >= geometry_.rowsPerBank)
    throw InvalidRequest(fmt::format("row {} out of range [0, {})", req.row, geometry_.rowsPerBank));
  if (req.issueTime < 0) throw InvalidRequest("negative issue time");
}

Ns Channel::banksDrainedAt() const {
  Ns t = 0;
  for (const auto& b : banks_) t = std::max(t, b.busyUntil);
  return t;
}

Ns Channel::applyFences(Ns start, Ns occupancy) const {
  // An access overlapping a fence waits for it; the block due there is
  // processed before the access is served.
  if (nextRefresh_ > start && nextRefresh_ < start + occupancy) return nextRefresh_;
  auto it = fences_.upper_bound(start);
  if (it != fences_.end() && *it < start + occupancy) return *it;
  return start;
}

Ns Channel::readyTime(const MemRequest& req) const {
  const Ns start = std::max({req.issueTime, clock_, blockedUntil_, banks_[req.bank].busyUntil});
  const bool hit = policy_ == PagePolicy::Open && banks_[req.bank].openRow == req.row;
  return applyFences(start, hit ? timings_.readLatency : timings_.tRC);
}

void Channel::addFence(Ns t) { fences_.insert(t); }

void Channel::releaseFence(Ns t) {
  if (auto it = fences_.find(t); it != fences_.end()) fences_.erase(it);
}

ServiceResult Channel::serviceRequest(const MemRequest& req) {
  checkRequest(req);
  Ns start = readyTime(req);
  while (nextEventTime() <= start) {
    processNextEvent();
    start = readyTime(req);
  }
  clock_ = start;

  BankState& bank = banks_[req.bank];
  const bool hit = policy_ == PagePolicy::Open && bank.openRow == req.row;
  ServiceResult res{start, start + timings_.readLatency, !hit};
  if (hit) {
    bank.busyUntil = std::max(bank.busyUntil, res.completion);
  } else {
    bank.busyUntil = start + timings_.tRC;
    bank.openRow = policy_ == PagePolicy::Open ? req.row : kNoRow;
    ++activations_;
    push({start + timings_.tRC, kPrioReport, 0, Kind::ActivationReport, req.bank, req.row, req.actor,
          BlockKind::Refresh, 0});
    for (auto* l : listeners_) l->onActivationStart(*this, req, start);
  }
  log_.record({res.completion, EventType::Command, req.bank, req.row, req.actor, hit ? "hit" : "act"});
  return res;
}

std::vector<ProtocolEvent> Channel::advanceTo(Ns t) {
  if (t < clock_) throw InvalidCall(fmt::format("advanceTo({}) before clock {}", t, clock_));
  std::vector<ProtocolEvent> out;
  while (nextEventTime() <= t) processNextEvent(&out);
  clock_ = t;
  return out;
}

Ns Channel::blockChannel(Ns duration, BlockKind kind, std::uint64_t tag) {
  if (duration <= 0) throw InvalidCall(fmt::format("block duration must be positive (got {})", duration));
  const Ns start = std::max({clock_, blockedUntil_, banksDrainedAt()});
  blockedUntil_ = start + duration;
  for (auto& b : banks_) b.openRow = kNoRow;
  blocks_.push_back({start, blockedUntil_, kind});
  push({start, kPrioBlock, 0, Kind::BlockStart, kNoBank, kNoRow, kNoActor, kind, tag});
  log_.record({start, EventType::BlockStart, kNoBank, kNoRow, kNoActor, std::string(toString(kind))});
  log_.record({blockedUntil_, EventType::BlockEnd, kNoBank, kNoRow, kNoActor, std::string(toString(kind))});
  return start;
}

void Channel::scheduleAt(Ns t, TimerFn fn) {
  if (t < clock_) throw InvalidCall(fmt::format("timer at {} before clock {}", t, clock_));
  std::uint64_t slot;
  if (!freeTimers_.empty()) {
    slot = freeTimers_.back();
    freeTimers_.pop_back();
    timers_[slot] = std::move(fn);
  } else {
    slot = timers_.size();
    timers_.push_back(std::move(fn));
  }
  push({t, kPrioTimer, 0, Kind::Timer, kNoBank, kNoRow, kNoActor, BlockKind::Refresh, slot});
}

bool Channel::processNextEvent(std::vector<ProtocolEvent>* sink) {
  if (queue_.empty()) return false;
  const Pending ev = queue_.top();
  queue_.pop();
  clock_ = std::max(clock_, ev.time);

  switch (ev.kind) {
    case Kind::ActivationReport:
      for (auto* l : listeners_) l->onActivation(*this, ev.bank, ev.row, ev.actor, ev.time);
      break;
    case Kind::BlockStart:
      if (sink && ev.block != BlockKind::Refresh)
        sink->push_back({ev.time, ProtocolEventKind::BlockStart, ev.block, ev.tag});
      if (ev.block == BlockKind::Refresh)
        log_.record({ev.time, EventType::Refresh, kNoBank, kNoRow, kNoActor, std::to_string(ev.tag)});
      for (auto* l : listeners_) l->onBlockStart(*this, ev.block, ev.time, ev.tag);
      break;
    case Kind::Refresh: {
      ++refreshIndex_;
      if (sink) sink->push_back({ev.time, ProtocolEventKind::Refresh, BlockKind::Refresh, refreshIndex_});
      blockChannel(timings_.tRFC, BlockKind::Refresh, refreshIndex_);
      nextRefresh_ = ev.time + timings_.tREFI;
      push({nextRefresh_, kPrioRefresh, 0, Kind::Refresh, kNoBank, kNoRow, kNoActor, BlockKind::Refresh, 0});
      break;
    }
    case Kind::RefreshWindow:
      ++windowIndex_;
      if (sink) sink->push_back({ev.time, ProtocolEventKind::RefreshWindow, BlockKind::Refresh, windowIndex_});
      for (auto* l : listeners_) l->onRefreshWindow(*this, ev.time, windowIndex_);
      push({ev.time + timings_.tREFW, kPrioWindow, 0, Kind::RefreshWindow, kNoBank, kNoRow, kNoActor,
            BlockKind::Refresh, 0});
      break;
    case Kind::Timer: {
      TimerFn fn = std::move(timers_[ev.tag]);
      timers_[ev.tag] = nullptr;
      freeTimers_.push_back(ev.tag);
      if (sink) sink->push_back({ev.time, ProtocolEventKind::Timer, BlockKind::Refresh, ev.tag});
      fn(*this, ev.time);
      break;
    }
  }
  return true;
}

}  // namespace praclab::dram
