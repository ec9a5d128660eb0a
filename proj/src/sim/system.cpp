#include "praclab/sim/system.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace praclab::sim {

std::string_view toString(Defense d) {
  switch (d) {
    case Defense::AboOnly: return "abo-only";
    case Defense::AboAcb: return "abo+acb";
    case Defense::Tprac: return "tprac";
  }
  return "unknown";
}

void SystemConfig::validate() const {
  timings.validate();
  geometry.validate();
  prac.validate();
  if (defense == Defense::AboAcb && !prac.bat) throw InvalidGeometry("abo+acb defense needs a BAT value");
  if (defense == Defense::Tprac && tbWindow <= 0) throw InvalidGeometry("tprac defense needs a TB-Window");
}

std::optional<Access> ProgramActor::next(Ns now) {
  if (program_.script.empty()) return std::nullopt;
  if (step_ == program_.script.size()) {
    step_ = 0;
    ++loop_;
  }
  if (loop_ >= program_.loops) return std::nullopt;
  const ProgramStep& s = program_.script[step_++];
  Access a{s.bank, s.row, 0};
  a.notBefore = s.timing == ProgramStep::Timing::Absolute ? s.time : now + s.time;
  return a;
}

namespace {
SystemConfig checked(SystemConfig c) {
  c.validate();
  if (c.defense != Defense::AboAcb) c.prac.bat.reset();
  return c;
}
}  // namespace

MemorySystem::MemorySystem(const SystemConfig& config)
    : config_(checked(config)),
      channel_(config_.timings, config_.geometry, config_.page, config_.logEvents),
      prac_(config_.prac, config_.geometry) {
  prac_.attach(channel_);
  if (config_.defense == Defense::Tprac) {
    tb_ = std::make_unique<tprac::TbRfmScheduler>(config_.tbWindow, config_.trefSkip);
    tb_->attach(channel_, prac_);
  }
}

ActorId MemorySystem::addActor(std::unique_ptr<Actor> actor) {
  const auto id = static_cast<ActorId>(actors_.size());
  actors_.push_back({std::move(actor), std::nullopt, 0, false});
  fetch(actors_.back(), channel_.clock());
  return id;
}

void MemorySystem::fetch(Slot& slot, Ns now) {
  slot.pending = slot.actor->next(now);
  if (!slot.pending) {
    slot.retired = true;
    return;
  }
  const Access& a = *slot.pending;
  if (a.bank < 0 || a.bank >= config_.geometry.numBanks || a.row < 0 || a.row >= config_.geometry.rowsPerBank)
    throw InvalidRequest(fmt::format("actor access to bank {} row {} out of range", a.bank, a.row));
  slot.issue = std::max(now, a.notBefore);
}

bool MemorySystem::allRetired() const {
  return std::all_of(actors_.begin(), actors_.end(), [](const Slot& s) { return s.retired; });
}

void MemorySystem::run(Ns until) {
  for (;;) {
    Slot* pick = nullptr;
    ActorId pickId = kNoActor;
    Ns best = dram::kNever;
    for (std::size_t i = 0; i < actors_.size(); ++i) {
      Slot& s = actors_[i];
      if (s.retired) continue;
      const Ns ready = channel_.readyTime({static_cast<ActorId>(i), s.pending->bank, s.pending->row, s.issue});
      if (ready < best) {
        best = ready;
        pick = &s;
        pickId = static_cast<ActorId>(i);
      }
    }
    if (!pick || best > until) {
      if (pick) channel_.advanceTo(until);
      return;
    }
    if (channel_.nextEventTime() <= best) {
      channel_.processNextEvent();
      continue;
    }
    const dram::MemRequest req{pickId, pick->pending->bank, pick->pending->row, pick->issue};
    const dram::ServiceResult r = channel_.serviceRequest(req);
    const AccessRecord rec{pickId, req.bank, req.row, req.issueTime, r.start, r.completion, r.activated};
    pick->actor->onComplete(rec);
    fetch(*pick, r.completion);
  }
}

}  // namespace praclab::sim
