#include "praclab/analysis/feinting_sim.hpp"

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "praclab/sim/system.hpp"

namespace praclab::analysis {

std::string_view toString(AttackPattern p) {
  switch (p) {
    case AttackPattern::Feinting: return "feinting";
    case AttackPattern::EqualActivations: return "equal-activations";
    case AttackPattern::DelayedActivations: return "delayed-activations";
    case AttackPattern::EarlyAggressive: return "early-aggressive";
    case AttackPattern::Random: return "random";
  }
  return "unknown";
}

namespace {

constexpr BankId kAttackBank = 0;

struct Shared {
  std::vector<char> mitigated;
  std::int64_t aliveDecoys = 0;
  bool targetMitigated = false;
  std::int64_t issued = 0;
};

class PatternActor : public sim::Actor {
 public:
  PatternActor(const FeintingSimConfig& cfg, Shared& shared, Ns start, Ns end)
      : cfg_(cfg), shared_(shared), target_(static_cast<RowId>(cfg.r1 - 1)), start_(start), end_(end),
        rng_(deriveStream(cfg.seed, 0)) {
    if (cfg.pattern == AttackPattern::Random) {
      std::uniform_real_distribution<double> frac(0.0, 1.0);
      hotFraction_ = frac(rng_);
      const auto hot = std::uniform_int_distribution<std::int64_t>(1, std::min<std::int64_t>(4, cfg.r1))(rng_);
      std::uniform_int_distribution<RowId> pick(0, target_);
      for (std::int64_t i = 0; i < hot; ++i) hotRows_.push_back(pick(rng_));
      gapChance_ = frac(rng_) * 0.3;
    }
  }

  std::optional<sim::Access> next(Ns now) override {
    if (shared_.issued >= cfg_.activationLimit) return std::nullopt;
    if (cfg_.pattern != AttackPattern::Feinting && now >= end_) return std::nullopt;
    const auto row = pick();
    if (!row) return std::nullopt;
    ++shared_.issued;
    Ns notBefore = first_ ? start_ : 0;
    first_ = false;
    if (cfg_.pattern == AttackPattern::Random && gapChance_ > 0) {
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < gapChance_)
        notBefore = std::max(notBefore, now + std::uniform_int_distribution<Ns>(1, 2 * cfg_.timings.tRC)(rng_));
    }
    return sim::Access{kAttackBank, *row, notBefore};
  }

 private:
  std::optional<RowId> pick() {
    switch (cfg_.pattern) {
      case AttackPattern::Feinting: return feinting();
      case AttackPattern::EqualActivations: {
        const auto r = static_cast<RowId>(cursor_ % cfg_.r1);
        ++cursor_;
        return r;
      }
      case AttackPattern::DelayedActivations: {
        const std::int64_t decoys = cfg_.r1 - 1;
        if (cursor_ < cfg_.decoyRounds * decoys) return static_cast<RowId>(cursor_++ % decoys);
        return target_;
      }
      case AttackPattern::EarlyAggressive: return target_;
      case AttackPattern::Random: {
        std::uniform_real_distribution<double> frac(0.0, 1.0);
        if (frac(rng_) < hotFraction_)
          return hotRows_[std::uniform_int_distribution<std::size_t>(0, hotRows_.size() - 1)(rng_)];
        return std::uniform_int_distribution<RowId>(0, target_)(rng_);
      }
    }
    return std::nullopt;
  }

  // One activation per surviving pool row per round, target last; rows the
  // defense already mitigated are dropped. Once only the target is left it
  // is hammered until it gets mitigated.
  std::optional<RowId> feinting() {
    if (shared_.targetMitigated) return std::nullopt;
    if (shared_.aliveDecoys == 0) return target_;
    for (;;) {
      if (pos_ == round_.size()) {
        round_.clear();
        for (RowId r = 0; r < target_; ++r)
          if (!shared_.mitigated[r]) round_.push_back(r);
        round_.push_back(target_);
        pos_ = 0;
      }
      const RowId r = round_[pos_++];
      if (!shared_.mitigated[r]) return r;
    }
  }

  const FeintingSimConfig& cfg_;
  Shared& shared_;
  RowId target_;
  Ns start_;
  Ns end_;
  std::mt19937_64 rng_;
  bool first_ = true;
  std::int64_t cursor_ = 0;
  std::vector<RowId> round_;
  std::size_t pos_ = 0;
  double hotFraction_ = 0;
  double gapChance_ = 0;
  std::vector<RowId> hotRows_;
};

}  // namespace

FeintingSimResult feintingSimulate(const FeintingSimConfig& cfg) {
  if (cfg.r1 < 1 || cfg.r1 > cfg.rowsPerBank) throw InvalidCall("R1 must be in [1, rowsPerBank]");

  sim::SystemConfig sc;
  sc.timings = cfg.timings;
  sc.geometry = {cfg.numBanks, cfg.rowsPerBank};
  sc.page = dram::PagePolicy::Closed;
  sc.prac = cfg.prac;
  sc.defense = cfg.tbWindow ? sim::Defense::Tprac : sim::Defense::AboOnly;
  sc.tbWindow = cfg.tbWindow.value_or(0);
  sim::MemorySystem system(sc);
  auto& prac = system.prac();
  prac.setKeepMitigationHistory(false);

  Shared shared;
  shared.mitigated.assign(static_cast<std::size_t>(cfg.r1), 0);
  shared.aliveDecoys = cfg.r1 - 1;
  const RowId target = static_cast<RowId>(cfg.r1 - 1);

  FeintingSimResult res;
  std::vector<Ns> targetActs;
  prac.activationObserver = [&](const prac::ActivationInfo& a) {
    if (a.bank != kAttackBank || a.row != target) return;
    res.targetMax = std::max<std::int64_t>(res.targetMax, a.count);
    targetActs.push_back(a.time);
  };
  prac.mitigationObserver = [&](const prac::MitigationEvent& ev) {
    if (ev.bank != kAttackBank || ev.row >= cfg.r1) return;
    if (ev.row == target) {
      shared.targetMitigated = true;
      return;
    }
    if (!shared.mitigated[ev.row]) {
      shared.mitigated[ev.row] = 1;
      --shared.aliveDecoys;
    }
  };

  const Ns window = cfg.tbWindow.value_or(cfg.timings.tREFI);
  const Ns start = cfg.tbWindow && cfg.alignToFirstRfm ? *cfg.tbWindow + cfg.timings.tRFMab : 0;
  const Ns end = start + cfg.windows * window;
  system.addActor(std::make_unique<PatternActor>(cfg, shared, start, end));
  system.run(dram::kNever - 1);

  res.alerts = prac.alerts();
  res.activations = static_cast<std::int64_t>(system.channel().activations());
  res.targetMitigated = shared.targetMitigated;
  res.endTime = system.now();
  if (auto* tb = system.tbRfm()) {
    res.tbRfms = static_cast<std::int64_t>(tb->issued());
    const auto& rfm = tb->issueTimes();
    std::size_t j = 0;
    std::int64_t run = 0;
    for (Ns t : targetActs) {
      while (j < rfm.size() && rfm[j] < t) {
        res.maxTargetActsPerWindow = std::max(res.maxTargetActsPerWindow, run);
        run = 0;
        ++j;
      }
      ++run;
    }
    res.maxTargetActsPerWindow = std::max(res.maxTargetActsPerWindow, run);
  }
  return res;
}

}  // namespace praclab::analysis
