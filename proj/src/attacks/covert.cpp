#include "praclab/attacks/covert.hpp"

#include <algorithm>
#include <memory>

#include <fmt/format.h>

namespace praclab::attacks {

std::string_view toString(CovertMode m) {
  return m == CovertMode::ActivityBased ? "activity" : "count";
}

std::uint32_t countSenderActivations(std::uint32_t symbol, std::uint32_t nBO) {
  return symbol == 0 ? nBO - 1 : symbol - 1;
}

int bitsPerSymbol(CovertMode mode, std::uint32_t nBO) {
  if (mode == CovertMode::ActivityBased) return 1;
  int bits = 0;
  while ((std::uint32_t{1} << (bits + 1)) <= nBO) ++bits;
  return bits;
}

Ns analyticSymbolPeriod(CovertMode mode, std::uint32_t nBO, const dram::TimingParams& t) {
  const Ns acts = mode == CovertMode::ActivityBased ? nBO : 2 * static_cast<Ns>(nBO);
  return acts * t.tRC + t.tRFMab;
}

namespace {

// Upper bound on the span of `n` accesses to one bank issued `gap` ns
// apart (start to start), counting every refresh that can fall inside as a
// full tRFC plus a lost row cycle.
Ns spanWithRefresh(std::int64_t n, Ns gap, const dram::TimingParams& t) {
  const Ns base = n * gap;
  Ns span = base;
  for (int i = 0; i < 8; ++i) span = base + (span / t.tREFI + 1) * (t.tRFC + t.tRC);
  return span;
}

Ns aboTail(int nMit, const dram::TimingParams& t) {
  return t.tABOACT + nMit * t.tRFMab + t.tRFC + 3 * t.tRC + t.readLatency;
}

// Count-based: the sender's largest symbol may raise the alert itself, so
// its sub-window also covers one burst.
Ns senderSpan(CovertMode mode, std::uint32_t nBO, int nMit, const dram::TimingParams& t) {
  if (mode == CovertMode::ActivityBased) return spanWithRefresh(nBO, t.tRC, t) + t.tRC;
  return spanWithRefresh(static_cast<std::int64_t>(nBO) - 1, t.tRC, t) + t.tRC + aboTail(nMit, t);
}

struct SymbolPlan {
  Ns origin = 0;
  Ns window = 0;
  Ns at(std::size_t i) const { return origin + static_cast<Ns>(i) * window; }
};

class ActivitySender : public sim::Actor {
 public:
  ActivitySender(const std::vector<bool>& bits, SymbolPlan plan, std::uint32_t nBO, BankId bank, int rows)
      : bits_(bits), plan_(plan), nBO_(nBO), bank_(bank), rows_(rows) {}
  std::optional<sim::Access> next(Ns) override {
    while (sym_ < bits_.size() && !bits_[sym_]) ++sym_;
    if (sym_ >= bits_.size()) return std::nullopt;
    if (fresh_ >= rows_) throw InvalidGeometry("activity sender ran out of fresh rows");
    sim::Access a{bank_, static_cast<RowId>(fresh_), hammered_ == 0 ? plan_.at(sym_) : 0};
    if (++hammered_ == nBO_) {
      hammered_ = 0;
      ++fresh_;
      ++sym_;
    }
    return a;
  }

 private:
  const std::vector<bool>& bits_;
  SymbolPlan plan_;
  std::uint32_t nBO_;
  BankId bank_;
  int rows_;
  std::size_t sym_ = 0;
  std::uint32_t hammered_ = 0;
  int fresh_ = 0;
};

class ActivityReceiver : public sim::Actor {
 public:
  ActivityReceiver(SymbolPlan plan, std::size_t symbols, BankId bank, int rows)
      : plan_(plan), end_(plan.at(symbols)), bank_(bank), rows_(rows) {}
  std::optional<sim::Access> next(Ns now) override {
    if (now >= end_) return std::nullopt;
    return sim::Access{bank_, static_cast<RowId>(i_++ % rows_), first_ ? plan_.origin : 0};
  }
  void onComplete(const sim::AccessRecord& r) override {
    first_ = false;
    samples.push_back(r);
  }
  std::vector<sim::AccessRecord> samples;

 private:
  SymbolPlan plan_;
  Ns end_;
  BankId bank_;
  int rows_;
  std::int64_t i_ = 0;
  bool first_ = true;
};

class CountSender : public sim::Actor {
 public:
  CountSender(const std::vector<std::uint32_t>& symbols, SymbolPlan plan, BankId bank, RowId row)
      : symbols_(symbols), plan_(plan), bank_(bank), row_(row) {}
  std::optional<sim::Access> next(Ns) override {
    while (sym_ < symbols_.size() && done_ == symbols_[sym_]) {
      ++sym_;
      done_ = 0;
    }
    if (sym_ >= symbols_.size()) return std::nullopt;
    sim::Access a{bank_, row_, done_ == 0 ? plan_.at(sym_) : 0};
    ++done_;
    return a;
  }

 private:
  const std::vector<std::uint32_t>& symbols_;
  SymbolPlan plan_;
  BankId bank_;
  RowId row_;
  std::size_t sym_ = 0;
  std::uint32_t done_ = 0;
};

// Activates the shared row at a paced rate after the sender's sub-window
// and counts accesses until the ABO latency spike. The access that shows
// the spike is held back by the burst and lands after the mitigation, so
// every symbol starts with one residual activation on the row; a priming
// access before the first symbol sets up the same state. The sender tops
// the row up to v, the receiver crosses nBO on its a-th access and decodes
// v = nBO - a. Symbol 0 is sent as nBO - 1 activations: the sender's own
// access raises the alert, the row is mitigated before the receiver starts
// and the receiver needs a = nBO accesses.
class CountReceiver : public sim::Actor {
 public:
  CountReceiver(std::size_t symbols, SymbolPlan plan, Ns senderSpan, Ns think, Ns threshold, std::uint32_t nBO,
                BankId bank, RowId row)
      : decoded(symbols), accesses(symbols, -1), plan_(plan), senderSpan_(senderSpan), think_(think), threshold_(threshold), nBO_(nBO),
        bank_(bank), row_(row) {}

  std::optional<sim::Access> next(Ns now) override {
    if (!primed_) return sim::Access{bank_, row_, 0};
    if (sym_ >= decoded.size()) return std::nullopt;
    const Ns notBefore = probes_ == 0 ? plan_.at(sym_) + senderSpan_ : now + think_;
    return sim::Access{bank_, row_, notBefore};
  }

  void onComplete(const sim::AccessRecord& r) override {
    if (!primed_) {
      primed_ = true;
      return;
    }
    ++probes_;
    if (r.latency() > threshold_) {
      const auto a = static_cast<std::uint32_t>(probes_ - 1);
      accesses[sym_] = a;
      if (a >= 1 && a <= nBO_) decoded[sym_] = a == nBO_ ? 0 : nBO_ - a;
      finishSymbol();
    } else if (probes_ > static_cast<std::int64_t>(nBO_)) {
      finishSymbol();
    }
  }

  std::vector<std::optional<std::uint32_t>> decoded;
  std::vector<std::int64_t> accesses;

 private:
  void finishSymbol() {
    ++sym_;
    probes_ = 0;
  }

  SymbolPlan plan_;
  Ns senderSpan_;
  Ns think_;
  Ns threshold_;
  std::uint32_t nBO_;
  BankId bank_;
  RowId row_;
  bool primed_ = false;
  std::size_t sym_ = 0;
  std::int64_t probes_ = 0;
};

}  // namespace

Ns symbolWindow(CovertMode mode, std::uint32_t nBO, int nMit, const dram::TimingParams& t) {
  if (mode == CovertMode::ActivityBased) return senderSpan(mode, nBO, nMit, t) + aboTail(nMit, t);
  const Ns step = t.readLatency + pacedThink(t);
  return senderSpan(mode, nBO, nMit, t) + spanWithRefresh(static_cast<std::int64_t>(nBO) + 1, step, t) + aboTail(nMit, t);
}

CovertResult runCovertChannel(const CovertConfig& cfg, const AttackSetup& setupIn) {
  AttackSetup setup = setupIn;
  setup.nBO = cfg.nBO;
  const auto& t = setup.timings;
  if (cfg.mode == CovertMode::ActivityBased && cfg.senderBank == cfg.receiverBank)
    throw InvalidGeometry("activity-based channel needs distinct sender and receiver banks");
  const Ns minWindow = symbolWindow(cfg.mode, cfg.nBO, setup.nMit, t);
  const Ns window = cfg.windowNs.value_or(minWindow);
  if (window < analyticSymbolPeriod(cfg.mode, cfg.nBO, t))
    throw InvalidGeometry(fmt::format("symbol window {} ns is below the analytic period", window));

  sim::MemorySystem system(setup.toSystem(prac::ResetPolicy::OnMitigationOnly));
  const bool paced = cfg.mode == CovertMode::ActivationCountBased;
  const Ns think = paced ? pacedThink(t) : 0;
  CovertResult res;
  res.threshold = calibrateMaxLatency(system, cfg.receiverBank, think, 3 * t.tREFI) + t.tRFMab / 2;
  res.bitsPerSymbol = bitsPerSymbol(cfg.mode, cfg.nBO);
  res.symbolPeriodNs = window;

  const SymbolPlan plan{system.now() + t.tREFI, window};
  const int bits = res.bitsPerSymbol;
  const std::size_t symbols = (cfg.payload.size() + static_cast<std::size_t>(bits) - 1) / static_cast<std::size_t>(bits);
  const int rows = system.config().geometry.rowsPerBank / 2;
  std::vector<bool> decoded(symbols * static_cast<std::size_t>(bits), false);

  if (cfg.mode == CovertMode::ActivityBased) {
    system.addActor(std::make_unique<ActivitySender>(cfg.payload, plan, cfg.nBO, cfg.senderBank, rows));
    auto rx = system.addActor(std::make_unique<ActivityReceiver>(plan, symbols, cfg.receiverBank, rows));
    system.run(dram::kNever - 1);
    for (const auto& s : system.actor<ActivityReceiver>(rx).samples) {
      if (s.latency() <= res.threshold || s.completion < plan.origin) continue;
      const auto i = static_cast<std::size_t>((s.completion - plan.origin) / window);
      if (i < symbols) decoded[i] = true;
    }
  } else {
    std::vector<std::uint32_t> values(symbols, 0);
    for (std::size_t i = 0; i < cfg.payload.size(); ++i)
      if (cfg.payload[i]) values[i / bits] |= 1u << (bits - 1 - static_cast<int>(i % bits));
    res.symbols = values;
    for (auto& v : values) v = countSenderActivations(v, cfg.nBO);
    system.addActor(std::make_unique<CountSender>(values, plan, cfg.receiverBank, cfg.sharedRow));
    auto rx = system.addActor(std::make_unique<CountReceiver>(symbols, plan, senderSpan(cfg.mode, cfg.nBO, setup.nMit, t), think,
                                                              res.threshold, cfg.nBO, cfg.receiverBank,
                                                              cfg.sharedRow));
    system.run(dram::kNever - 1);
    const auto& got = system.actor<CountReceiver>(rx).decoded;
    res.receiverAccesses = system.actor<CountReceiver>(rx).accesses;
    for (std::size_t s = 0; s < symbols; ++s) {
      if (!got[s] || *got[s] >= (1u << bits)) {
        ++res.decodeFailures;
        continue;
      }
      for (int b = 0; b < bits; ++b) decoded[s * bits + b] = (*got[s] >> (bits - 1 - b)) & 1u;
    }
  }

  res.decodedPayload.assign(decoded.begin(), decoded.begin() + static_cast<std::ptrdiff_t>(cfg.payload.size()));
  for (std::size_t i = 0; i < cfg.payload.size(); ++i) res.bitErrors += res.decodedPayload[i] != cfg.payload[i];
  res.errorRate = cfg.payload.empty() ? 0.0 : static_cast<double>(res.bitErrors) / static_cast<double>(cfg.payload.size());
  res.bitrateBps = static_cast<double>(res.bitsPerSymbol) / (static_cast<double>(window) * 1e-9);
  res.alerts = system.prac().alerts();
  return res;
}

}  // namespace praclab::attacks
