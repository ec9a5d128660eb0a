#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "praclab/dram/channel.hpp"
#include "praclab/prac/prac_engine.hpp"

using namespace praclab;
using namespace praclab::dram;

namespace {

struct Recorder : ChannelListener {
  std::uint64_t reports = 0;
  std::vector<Ns> reportTimes;
  void onActivation(Channel&, BankId, RowId, ActorId, Ns at) override {
    ++reports;
    reportTimes.push_back(at);
  }
};

struct Served {
  MemRequest req;
  ServiceResult res;
};

// Random request stream with occasional RFM-style blocks mixed in.
std::vector<Served> randomTraffic(Channel& ch, std::mt19937_64& rng, int n, bool withBlocks) {
  std::uniform_int_distribution<int> bank(0, ch.geometry().numBanks - 1);
  std::uniform_int_distribution<int> row(0, 7);
  std::uniform_int_distribution<int> gap(0, 120);
  std::uniform_int_distribution<int> coin(0, 99);
  std::vector<Served> out;
  Ns t = 0;
  for (int i = 0; i < n; ++i) {
    t = std::max(t, ch.clock()) + gap(rng);
    MemRequest req{i % 3, bank(rng), row(rng), t};
    out.push_back({req, ch.serviceRequest(req)});
    if (withBlocks && coin(rng) < 3) ch.blockChannel(350, BlockKind::AboRfm);
  }
  ch.advanceTo(ch.clock() + 1000);
  return out;
}

DramGeometry smallGeometry() { return {4, 1024}; }

}  // namespace

TEST_SUITE("dram-core") {
  TEST_CASE("fresh channel state") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    CHECK(ch.clock() == 0);
    CHECK(ch.blockedUntil() == 0);
    CHECK(ch.nextRefresh() == 3900);
    for (BankId b = 0; b < 4; ++b) CHECK(ch.openRow(b) == kNoRow);
  }

  TEST_CASE("timing and geometry validation") {
    TimingParams t;
    t.tRFC = t.tREFI;
    CHECK_THROWS_AS(Channel(t, smallGeometry(), PagePolicy::Closed), InvalidGeometry);
    t = {};
    t.tREFW = t.tREFI * 3 + 1;
    CHECK_THROWS_AS(t.validate(), InvalidGeometry);
    t = {};
    t.tRFMab = 0;
    CHECK_THROWS_AS(t.validate(), InvalidGeometry);
    CHECK_THROWS_AS(Channel({}, {1, 1024}, PagePolicy::Closed), InvalidGeometry);
    CHECK_THROWS_AS(Channel({}, {4, 15}, PagePolicy::Closed), InvalidGeometry);
    CHECK(TimingParams{}.tREFW == 8192 * 3900);
  }

  TEST_CASE("full-size geometry is usable") {
    Channel ch({}, {32, 128 * 1024}, PagePolicy::Open);
    auto r = ch.serviceRequest({0, 31, 128 * 1024 - 1, 0});
    CHECK(r.completion == 32);
    CHECK(ch.openRow(31) == 128 * 1024 - 1);
  }

  TEST_CASE("unloaded closed-page request") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    Recorder rec;
    ch.addListener(&rec);
    auto r = ch.serviceRequest({0, 1, 5, 0});
    CHECK(r.start == 0);
    CHECK(r.completion == 32);
    CHECK(r.activated);
    CHECK(ch.activations() == 1);
    CHECK(rec.reports == 0);  // counter update happens at precharge
    ch.advanceTo(52);
    REQUIRE(rec.reports == 1);
    CHECK(rec.reportTimes[0] == 52);
  }

  TEST_CASE("request during an RFM block waits for it") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    CHECK(ch.blockChannel(350, BlockKind::AboRfm) == 0);
    auto r = ch.serviceRequest({0, 0, 0, 100});
    CHECK(r.start == 350);
    CHECK(r.completion == 382);
  }

  TEST_CASE("same bank activations are tRC apart") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    auto a = ch.serviceRequest({0, 2, 1, 0});
    auto b = ch.serviceRequest({0, 2, 2, a.completion});
    CHECK(b.start - a.start == 52);
    // Other banks are not held back.
    auto c = ch.serviceRequest({1, 3, 1, b.start});
    CHECK(c.start == b.start);
  }

  TEST_CASE("open page hit needs no activation") {
    Channel ch({}, smallGeometry(), PagePolicy::Open);
    auto a = ch.serviceRequest({0, 0, 9, 0});
    auto b = ch.serviceRequest({0, 0, 9, a.completion});
    CHECK(a.activated);
    CHECK_FALSE(b.activated);
    CHECK(b.completion - b.start == 32);
    CHECK(ch.activations() == 1);
  }

  TEST_CASE("out of range requests") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    CHECK_THROWS_AS(ch.serviceRequest({0, 4, 0, 0}), InvalidRequest);
    CHECK_THROWS_AS(ch.serviceRequest({0, 0, 1024, 0}), InvalidRequest);
    CHECK_THROWS_AS(ch.serviceRequest({0, -1, 0, 0}), InvalidRequest);
  }

  TEST_CASE("advance over one refresh interval") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    auto ev = ch.advanceTo(3900);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == ProtocolEventKind::Refresh);
    CHECK(ev[0].time == 3900);
    CHECK(ch.blockedUntil() == 3900 + 410);
    CHECK(ch.nextRefresh() == 7800);
    CHECK(ch.refreshes() == 1);
  }

  TEST_CASE("advance by zero") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    ch.advanceTo(1000);
    auto ev = ch.advanceTo(1000);
    CHECK(ev.empty());
    CHECK(ch.clock() == 1000);
    CHECK(ch.blockedUntil() == 0);
    CHECK_THROWS_AS(ch.advanceTo(999), InvalidCall);
  }

  TEST_CASE("refresh window boundary resets counters once") {
    TimingParams t;
    t.tREFW = 4 * t.tREFI;
    Channel ch(t, smallGeometry(), PagePolicy::Closed);
    prac::PracConfig pc;
    pc.resetPolicy = prac::ResetPolicy::PerTrefw;
    prac::PracEngine eng(pc, smallGeometry());
    eng.attach(ch);
    ch.serviceRequest({0, 0, 3, 0});
    ch.advanceTo(100);
    CHECK(eng.counter(0, 3) == 1);
    auto ev = ch.advanceTo(t.tREFW + 1);
    auto windows = std::count_if(ev.begin(), ev.end(),
                                 [](const ProtocolEvent& e) { return e.kind == ProtocolEventKind::RefreshWindow; });
    CHECK(windows == 1);
    CHECK(eng.counter(0, 3) == 0);
    auto entries = ch.log().ordered();
    auto resets = std::count_if(entries.begin(), entries.end(),
                                [](const LogEntry& e) { return e.type == EventType::CounterReset; });
    CHECK(resets == 1);
  }

  TEST_CASE("blockChannel extends from the current clock") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    ch.advanceTo(1000);
    ch.blockChannel(350, BlockKind::AboRfm);
    CHECK(ch.blockedUntil() == 1350);
    ch.blockChannel(350, BlockKind::AboRfm);
    CHECK(ch.blockedUntil() == 1700);
    CHECK(ch.blocks().size() == 2);
    CHECK(ch.blocks()[1].start == 1350);
    CHECK_THROWS_AS(ch.blockChannel(0, BlockKind::AboRfm), InvalidCall);
  }

  TEST_CASE("back-to-back bursts of four") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    ch.advanceTo(100);
    for (int i = 0; i < 4; ++i) ch.blockChannel(350, BlockKind::AboRfm);
    CHECK(ch.blockedUntil() - 100 == 1400);
  }

  TEST_CASE("a block waits for in-flight activations") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    ch.serviceRequest({0, 0, 0, 0});
    CHECK(ch.blockChannel(350, BlockKind::TbRfm) == 52);
  }

  TEST_CASE("csv export") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed);
    ch.serviceRequest({3, 1, 2, 0});
    ch.advanceTo(4000);
    std::ostringstream os;
    ch.log().writeCsv(os);
    std::string text = os.str();
    CHECK(text.rfind("time_ns,event,bank,row,actor,detail\n", 0) == 0);
    CHECK(text.find("32,cmd,1,2,3,act\n") != std::string::npos);
    CHECK(text.find("3900,ref,,,,1\n") != std::string::npos);
    CHECK(text.find("3900,block_start,,,,ref\n") != std::string::npos);
    CHECK(text.find("4310,block_end,,,,ref\n") != std::string::npos);
  }

  TEST_CASE("disabled log records nothing") {
    Channel ch({}, smallGeometry(), PagePolicy::Closed, false);
    ch.serviceRequest({0, 0, 0, 0});
    ch.advanceTo(10000);
    CHECK(ch.log().size() == 0);
  }

  TEST_CASE("property: determinism") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::string logs[2];
      for (auto& text : logs) {
        Channel ch({}, smallGeometry(), PagePolicy::Open);
        auto rng = deriveStream(seed, 0);
        randomTraffic(ch, rng, 400, true);
        std::ostringstream os;
        ch.log().writeCsv(os);
        text = os.str();
      }
      CHECK(logs[0] == logs[1]);
    }
  }

  TEST_CASE("property: no completion inside a block, timestamps ordered") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      Channel ch({}, smallGeometry(), seed % 2 ? PagePolicy::Open : PagePolicy::Closed);
      auto rng = deriveStream(seed, 1);
      auto served = randomTraffic(ch, rng, 1500, true);
      for (const auto& s : served) {
        for (const auto& b : ch.blocks()) {
          bool inside = s.res.completion > b.start && s.res.completion < b.end;
          CHECK_FALSE(inside);
          bool startsInside = s.res.start >= b.start && s.res.start < b.end;
          CHECK_FALSE(startsInside);
        }
      }
      auto entries = ch.log().ordered();
      CHECK(std::is_sorted(entries.begin(), entries.end(),
                           [](const LogEntry& a, const LogEntry& b) { return a.time < b.time; }));
    }
  }

  TEST_CASE("property: per-bank activation rate bound") {
    const Ns tRC = TimingParams{}.tRC;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      Channel ch({}, smallGeometry(), PagePolicy::Closed);
      auto rng = deriveStream(seed, 2);
      auto served = randomTraffic(ch, rng, 1500, seed % 3 == 0);
      std::map<BankId, std::vector<Ns>> starts;
      for (const auto& s : served)
        if (s.res.activated) starts[s.req.bank].push_back(s.res.start);
      std::uniform_int_distribution<Ns> span(1, 2000);
      for (auto& [bank, v] : starts) {
        for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] - v[i - 1] >= tRC);
        // Sampled half-open spans [a, a + d).
        for (int k = 0; k < 50; ++k) {
          Ns a = v[static_cast<std::size_t>(k) % v.size()];
          Ns d = span(rng);
          auto n = std::count_if(v.begin(), v.end(), [&](Ns x) { return x >= a && x < a + d; });
          CHECK(n <= (d + tRC - 1) / tRC);
        }
      }
    }
  }

  TEST_CASE("property: activations logged equal counter increments reported") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Channel ch({}, smallGeometry(), seed % 2 ? PagePolicy::Open : PagePolicy::Closed);
      prac::PracConfig pc;
      pc.nBO = 1'000'000;
      prac::PracEngine eng(pc, smallGeometry());
      eng.attach(ch);
      std::uint64_t increments = 0;
      eng.activationObserver = [&](const prac::ActivationInfo&) { ++increments; };
      auto rng = deriveStream(seed, 3);
      randomTraffic(ch, rng, 800, false);
      auto entries = ch.log().ordered();
      auto acts = std::count_if(entries.begin(), entries.end(),
                                [](const LogEntry& e) { return e.type == EventType::Command && e.detail == "act"; });
      CHECK(static_cast<std::uint64_t>(acts) == increments);
      CHECK(ch.activations() == increments);
    }
  }
}
