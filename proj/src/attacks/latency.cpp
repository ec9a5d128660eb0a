#include "praclab/attacks/latency.hpp"

#include <memory>
#include <sstream>
#include <vector>

namespace praclab::attacks {

namespace {

class ObserverActor : public sim::Actor {
 public:
  ObserverActor(int rows, const Ns& stopAt) : rows_(rows), stopAt_(stopAt) {}
  std::optional<sim::Access> next(Ns now) override {
    if (now >= stopAt_) return std::nullopt;
    return sim::Access{0, static_cast<RowId>(i_++ % rows_), 0};
  }
  void onComplete(const sim::AccessRecord& r) override { samples.push_back(r); }

  std::vector<sim::AccessRecord> samples;

 private:
  int rows_;
  const Ns& stopAt_;
  std::int64_t i_ = 0;
};

// Alternates two fresh rows of bank 1 for 2·nBO accesses, then idles.
// After the last burst the observer is given one more idle gap.
class TriggerActor : public sim::Actor {
 public:
  TriggerActor(std::uint32_t nBO, int bursts, Ns idleGap, Ns& stopAt)
      : nBO_(nBO), bursts_(bursts), gap_(idleGap), stopAt_(stopAt) {}
  std::optional<sim::Access> next(Ns now) override {
    if (burst_ >= bursts_) {
      stopAt_ = now + gap_;
      return std::nullopt;
    }
    Ns notBefore = 0;
    if (inBurst_ == 0 && burst_ > 0) notBefore = now + gap_;
    const RowId row = static_cast<RowId>(2 * burst_ + (inBurst_ & 1));
    if (++inBurst_ == 2 * static_cast<std::int64_t>(nBO_)) {
      inBurst_ = 0;
      ++burst_;
    }
    return sim::Access{1, row, notBefore};
  }

 private:
  std::uint32_t nBO_;
  int bursts_;
  Ns gap_;
  Ns& stopAt_;
  int burst_ = 0;
  std::int64_t inBurst_ = 0;
};

}  // namespace

LatencyResult runLatencyCharacterization(const LatencyConfig& cfg) {
  sim::MemorySystem system(cfg.setup.toSystem(prac::ResetPolicy::OnMitigationOnly));
  // An idle-trigger run still spans about as long as an active one.
  Ns stopAt = cfg.triggerActive
                  ? dram::kNever
                  : cfg.bursts * (cfg.idleGap + 2 * static_cast<Ns>(cfg.setup.nBO) * cfg.setup.timings.tRC);
  auto obs = system.addActor(std::make_unique<ObserverActor>(cfg.observerRows, stopAt));
  if (cfg.triggerActive)
    system.addActor(std::make_unique<TriggerActor>(cfg.setup.nBO, cfg.bursts, cfg.idleGap, stopAt));
  system.run(dram::kNever - 1);

  const auto& bursts = system.prac().aboBursts();
  const auto& samples = system.actor<ObserverActor>(obs).samples;
  LatencyResult res;
  res.nMit = cfg.setup.nMit;
  res.aboBursts = bursts.size();
  double idleSum = 0, aboSum = 0;
  std::size_t b = 0;
  for (const auto& s : samples) {
    while (b < bursts.size() && bursts[b].lastBlockEnd <= s.issue) ++b;
    const bool overlaps = b < bursts.size() && s.issue < bursts[b].lastBlockEnd && s.completion > bursts[b].firstBlockStart;
    if (overlaps) {
      aboSum += static_cast<double>(s.latency());
      ++res.aboSamples;
    } else {
      idleSum += static_cast<double>(s.latency());
      ++res.idleSamples;
    }
  }
  res.avgNsIdle = res.idleSamples ? idleSum / static_cast<double>(res.idleSamples) : 0.0;
  if (cfg.setup.logEvents) {
    std::ostringstream csv;
    system.channel().log().writeCsv(csv);
    res.eventsCsv = csv.str();
  }
  res.avgNsAbo = res.aboSamples ? aboSum / static_cast<double>(res.aboSamples) : res.avgNsIdle;
  return res;
}

}  // namespace praclab::attacks
