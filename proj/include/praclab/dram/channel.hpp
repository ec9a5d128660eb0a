#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <vector>

#include "praclab/common.hpp"
#include "praclab/dram/event_log.hpp"
#include "praclab/dram/timing.hpp"

namespace praclab::dram {

inline constexpr Ns kNever = std::numeric_limits<Ns>::max();

enum class BlockKind : std::uint8_t { Refresh, AboRfm, AcbRfm, TbRfm };

std::string_view toString(BlockKind kind);

struct BlockInterval {
  Ns start = 0;
  Ns end = 0;
  BlockKind kind = BlockKind::Refresh;
};

struct MemRequest {
  ActorId actor = kNoActor;
  BankId bank = 0;
  RowId row = 0;
  Ns issueTime = 0;
};

struct ServiceResult {
  Ns start = 0;
  Ns completion = 0;
  bool activated = false;
};

enum class ProtocolEventKind : std::uint8_t { Refresh, RefreshWindow, BlockStart, Timer };

struct ProtocolEvent {
  Ns time = 0;
  ProtocolEventKind kind = ProtocolEventKind::Refresh;
  BlockKind block = BlockKind::Refresh;
  std::uint64_t index = 0;
};

class Channel;

// Hooks for the mitigation layer. All callbacks run synchronously inside
// the channel's event processing.
class ChannelListener {
 public:
  virtual ~ChannelListener() = default;
  // An activation begins service at `start` (row open until start + tRC).
  virtual void onActivationStart(Channel&, const MemRequest&, Ns /*start*/) {}
  // Precharge completion of an activation: the point where the row counter
  // is updated.
  virtual void onActivation(Channel&, BankId, RowId, ActorId, Ns /*at*/) {}
  // A channel block begins. For refresh blocks `tag` is the 1-based REF index.
  virtual void onBlockStart(Channel&, BlockKind, Ns /*at*/, std::uint64_t /*tag*/) {}
  virtual void onRefreshWindow(Channel&, Ns /*at*/, std::uint64_t /*index*/) {}
};

// One DRAM channel: per-bank busy state, periodic all-bank refresh, and
// channel-wide blocking. Single-threaded; instances share nothing.
class Channel {
 public:
  using TimerFn = std::function<void(Channel&, Ns)>;

  Channel(TimingParams timings, DramGeometry geometry, PagePolicy policy, bool logEvents = true);

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void addListener(ChannelListener* listener) { listeners_.push_back(listener); }

  const TimingParams& timings() const { return timings_; }
  const DramGeometry& geometry() const { return geometry_; }
  PagePolicy pagePolicy() const { return policy_; }

  Ns clock() const { return clock_; }
  Ns blockedUntil() const { return blockedUntil_; }
  Ns nextRefresh() const { return nextRefresh_; }
  Ns bankBusyUntil(BankId bank) const { return banks_[bank].busyUntil; }
  RowId openRow(BankId bank) const { return banks_[bank].openRow; }

  // Earliest time `req` could start if no further internal event intervened.
  Ns readyTime(const MemRequest& req) const;

  // Serve one request. Internal events due at or before the start time are
  // processed first, so a request never overtakes a block that is due.
  ServiceResult serviceRequest(const MemRequest& req);

  std::vector<ProtocolEvent> advanceTo(Ns t);

  // Block the whole channel for `duration`. Starts once the channel is free
  // and in-flight activations have drained. Returns the block start time.
  Ns blockChannel(Ns duration, BlockKind kind, std::uint64_t tag = 0);

  // Run `fn` at time t (t >= clock). Timers run after activation reports,
  // block starts and refreshes scheduled for the same instant.
  void scheduleAt(Ns t, TimerFn fn);

  // A block known in advance (refresh, TB-RFM) begins at its fence time: no
  // access is started that would still occupy its bank at the fence, so the
  // block start does not depend on traffic. The next refresh is always
  // fenced; other fences are added and released by their owner.
  void addFence(Ns t);
  void releaseFence(Ns t);

  Ns nextEventTime() const { return queue_.empty() ? kNever : queue_.top().time; }
  // Process exactly one internal event. Returns false if none is pending.
  bool processNextEvent(std::vector<ProtocolEvent>* sink = nullptr);

  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  const std::vector<BlockInterval>& blocks() const { return blocks_; }
  std::uint64_t activations() const { return activations_; }
  std::uint64_t refreshes() const { return refreshIndex_; }

 private:
  enum class Kind : std::uint8_t { ActivationReport, BlockStart, Refresh, RefreshWindow, Timer };

  struct Pending {
    Ns time;
    std::uint8_t prio;
    std::uint64_t seq;
    Kind kind;
    BankId bank;
    RowId row;
    ActorId actor;
    BlockKind block;
    std::uint64_t tag;
  };

  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.prio != b.prio) return a.prio > b.prio;
      return a.seq > b.seq;
    }
  };

  struct BankState {
    Ns busyUntil = 0;
    RowId openRow = kNoRow;
  };

  void push(Pending p);
  void checkRequest(const MemRequest& req) const;
  Ns banksDrainedAt() const;
  Ns applyFences(Ns start, Ns occupancy) const;

  TimingParams timings_;
  DramGeometry geometry_;
  PagePolicy policy_;
  Ns clock_ = 0;
  Ns blockedUntil_ = 0;
  Ns nextRefresh_;
  std::uint64_t refreshIndex_ = 0;
  std::uint64_t windowIndex_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t activations_ = 0;
  std::vector<BankState> banks_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  std::vector<TimerFn> timers_;
  std::vector<std::uint64_t> freeTimers_;
  std::vector<ChannelListener*> listeners_;
  std::vector<BlockInterval> blocks_;
  std::multiset<Ns> fences_;
  EventLog log_;
};

}  // namespace praclab::dram
