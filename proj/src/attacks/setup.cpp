#include "praclab/attacks/setup.hpp"

#include <algorithm>
#include <memory>

#include "praclab/tprac/tb_rfm.hpp"

namespace praclab::attacks {

sim::SystemConfig AttackSetup::toSystem(prac::ResetPolicy reset) const {
  sim::SystemConfig c;
  c.timings = timings;
  c.geometry = geometry;
  c.page = dram::PagePolicy::Closed;
  c.prac.nBO = nBO;
  c.prac.nMit = nMit;
  c.prac.resetPolicy = reset;
  c.prac.trefPeriod = trefPeriod;
  if (defense == sim::Defense::AboAcb) c.prac.bat = bat;
  c.defense = defense;
  if (defense == sim::Defense::Tprac) c.tbWindow = resolveTbWindow(reset);
  c.trefSkip = trefSkip;
  c.logEvents = logEvents;
  return c;
}

Ns AttackSetup::resolveTbWindow(prac::ResetPolicy reset) const {
  if (tbWindow) return *tbWindow;
  return tprac::configureFromAnalysis(nBO, timings, reset == prac::ResetPolicy::PerTrefw,
                                      analysis::Convention::Conservative, geometry.rowsPerBank);
}

Ns pacedThink(const dram::TimingParams& t) { return t.tABOACT + t.tRC - t.readLatency + 8; }

namespace {

class CalibrationActor : public sim::Actor {
 public:
  CalibrationActor(BankId bank, RowId firstRow, int rows, Ns think, Ns end)
      : bank_(bank), first_(firstRow), rows_(rows), think_(think), end_(end) {}

  std::optional<sim::Access> next(Ns now) override {
    if (now >= end_) return std::nullopt;
    const RowId row = first_ + static_cast<RowId>(i_++ % rows_);
    return sim::Access{bank_, row, started_ ? now + think_ : 0};
  }
  void onComplete(const sim::AccessRecord& r) override {
    started_ = true;
    maxLatency = std::max(maxLatency, r.latency());
  }

  Ns maxLatency = 0;

 private:
  BankId bank_;
  RowId first_;
  int rows_;
  Ns think_;
  Ns end_;
  std::int64_t i_ = 0;
  bool started_ = false;
};

}  // namespace

Ns calibrateMaxLatency(sim::MemorySystem& system, BankId bank, Ns think, Ns duration) {
  const int rowsPerBank = system.config().geometry.rowsPerBank;
  const int rows = std::min(1024, rowsPerBank / 2);
  auto id = system.addActor(
      std::make_unique<CalibrationActor>(bank, rowsPerBank - rows, rows, think, system.now() + duration));
  system.run(dram::kNever - 1);
  return system.actor<CalibrationActor>(id).maxLatency;
}

}  // namespace praclab::attacks
