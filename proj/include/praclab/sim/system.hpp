#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "praclab/common.hpp"
#include "praclab/dram/channel.hpp"
#include "praclab/prac/prac_engine.hpp"
#include "praclab/tprac/tb_rfm.hpp"

namespace praclab::sim {

enum class Defense { AboOnly, AboAcb, Tprac };

std::string_view toString(Defense d);

struct SystemConfig {
  dram::TimingParams timings{};
  dram::DramGeometry geometry{};
  dram::PagePolicy page = dram::PagePolicy::Closed;
  prac::PracConfig prac{};
  Defense defense = Defense::AboOnly;
  Ns tbWindow = 0;  // required for Tprac
  bool trefSkip = false;
  bool logEvents = false;

  void validate() const;
};

struct Access {
  BankId bank = 0;
  RowId row = 0;
  Ns notBefore = 0;  // earliest issue time; 0 = as soon as the previous access completes
};

struct AccessRecord {
  ActorId actor = kNoActor;
  BankId bank = 0;
  RowId row = 0;
  Ns issue = 0;
  Ns start = 0;
  Ns completion = 0;
  bool activated = false;

  Ns latency() const { return completion - issue; }
};

// A memory client with at most one outstanding access (a dependent load
// chain). next() is asked for the following access when the previous one
// completes; returning nullopt retires the actor.
class Actor {
 public:
  virtual ~Actor() = default;
  virtual std::optional<Access> next(Ns now) = 0;
  virtual void onComplete(const AccessRecord&) {}
};

// Scripted actor: a fixed access list replayed `loops` times.
struct ProgramStep {
  enum class Timing { Absolute, AfterPrevious };
  Timing timing = Timing::AfterPrevious;
  Ns time = 0;  // absolute issue time, or gap after the previous completion
  BankId bank = 0;
  RowId row = 0;
};

struct ActorProgram {
  std::vector<ProgramStep> script;
  int loops = 1;
};

class ProgramActor : public Actor {
 public:
  explicit ProgramActor(ActorProgram program) : program_(std::move(program)) {}
  std::optional<Access> next(Ns now) override;
  const std::vector<AccessRecord>& records() const { return records_; }
  void onComplete(const AccessRecord& r) override { records_.push_back(r); }

 private:
  ActorProgram program_;
  std::size_t step_ = 0;
  int loop_ = 0;
  std::vector<AccessRecord> records_;
};

// Channel + PRAC engine + optional TB-RFM scheduler, driven by actors.
// Among ready accesses the earliest start wins; ties go to the lowest actor id.
class MemorySystem {
 public:
  explicit MemorySystem(const SystemConfig& config);

  MemorySystem(const MemorySystem&) = delete;
  MemorySystem& operator=(const MemorySystem&) = delete;

  ActorId addActor(std::unique_ptr<Actor> actor);
  template <typename T>
  T& actor(ActorId id) {
    return static_cast<T&>(*actors_[static_cast<std::size_t>(id)].actor);
  }

  // Serve accesses until every actor has retired or the next access would
  // start after `until`. In the latter case the channel is advanced to `until`.
  void run(Ns until);
  bool allRetired() const;

  Ns now() const { return channel_.clock(); }
  dram::Channel& channel() { return channel_; }
  const dram::Channel& channel() const { return channel_; }
  prac::PracEngine& prac() { return prac_; }
  const prac::PracEngine& prac() const { return prac_; }
  tprac::TbRfmScheduler* tbRfm() { return tb_.get(); }
  const SystemConfig& config() const { return config_; }

 private:
  struct Slot {
    std::unique_ptr<Actor> actor;
    std::optional<Access> pending;
    Ns issue = 0;
    bool retired = false;
  };

  void fetch(Slot& slot, Ns now);

  SystemConfig config_;
  dram::Channel channel_;
  prac::PracEngine prac_;
  std::unique_ptr<tprac::TbRfmScheduler> tb_;
  std::vector<Slot> actors_;
};

}  // namespace praclab::sim
