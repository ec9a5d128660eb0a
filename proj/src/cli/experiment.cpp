#include "praclab/cli/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "praclab/analysis/feinting_sim.hpp"
#include "praclab/attacks/aes.hpp"
#include "praclab/attacks/covert.hpp"
#include "praclab/attacks/latency.hpp"
#include "praclab/tprac/tb_rfm.hpp"

namespace praclab::cli {

using nlohmann::json;

namespace {

// Runs fn(i) for every sweep point concurrently; results come back in
// point order regardless of completion order.
template <typename R>
std::vector<R> sweep(std::size_t n, const std::function<R(std::size_t)>& fn) {
  std::vector<std::future<R>> futures;
  futures.reserve(n);
  for (std::size_t i = 0; i < n; ++i) futures.push_back(std::async(std::launch::async, fn, i));
  std::vector<R> out;
  out.reserve(n);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string fmtDouble(double v) { return fmt::format("{:.6g}", v); }

class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", (dir_ / name).string()));
    f << content;
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct RunContext {
  const ExperimentConfig& cfg;
  Outputs& out;
  json results = json::object();
  json window = nullptr;
  bool checkPassed = true;
  std::vector<std::string> checkFailures;

  void fail(std::string why) {
    checkPassed = false;
    checkFailures.push_back(std::move(why));
  }
};

Ns resolveWindow(RunContext& ctx, std::uint32_t nBO, bool reset) {
  const auto& c = ctx.cfg;
  Ns w = c.tbWindow->automatic ? tprac::configureFromAnalysis(nBO, c.timings, reset, c.solverConvention,
                                                              c.geometry.rowsPerBank)
                               : c.tbWindow->ns;
  ctx.window = {{"ns", w},
                {"trefi", static_cast<double>(w) / static_cast<double>(c.timings.tREFI)},
                {"auto", c.tbWindow->automatic},
                {"convention", analysis::toString(c.solverConvention)},
                {"bandwidthLoss", w > c.timings.tRFMab ? json(tprac::bandwidthLoss(w, c.timings)) : json(nullptr)}};
  return w;
}

attacks::AttackSetup attackSetup(RunContext& ctx, prac::ResetPolicy reset) {
  const auto& c = ctx.cfg;
  attacks::AttackSetup s;
  s.defense = c.defense;
  s.nBO = c.prac.nBO;
  if (c.nMitGiven) s.nMit = c.prac.nMit;
  ctx.results["attackNMit"] = s.nMit;
  s.bat = c.prac.bat.value_or(75);
  s.trefSkip = c.trefSkip;
  s.trefPeriod = c.trefPeriod;
  s.timings = c.timings;
  s.geometry = c.geometry;
  s.logEvents = c.events;
  if (c.defense == sim::Defense::Tprac) s.tbWindow = resolveWindow(ctx, c.prac.nBO, reset == prac::ResetPolicy::PerTrefw);
  return s;
}

void runAnalyze(RunContext& ctx) {
  const auto& c = ctx.cfg;
  struct Point {
    double trefi;
    bool reset;
  };
  std::vector<Point> points;
  for (double w : c.analyze.tbWindowsTrefi)
    for (bool r : c.analyze.reset) points.push_back({w, r});
  const auto outcomes = sweep<analysis::FeintingOutcome>(points.size(), [&](std::size_t i) {
    analysis::AnalysisParams p;
    p.tbWindow = std::llround(points[i].trefi * static_cast<double>(c.timings.tREFI));
    p.timings = c.timings;
    p.rowsPerBank = c.analyze.rowsPerBank;
    p.maxActTrefw = c.analyze.maxActTrefw;
    p.resetEnabled = points[i].reset;
    p.convention = c.convention;
    p.optR1Rule = c.analyze.optR1Rule;
    return analysis::tMax(p);
  });
  std::string csv = "tb_window_trefi,reset,opt_r1,attack_rounds,t_max\n";
  json rows = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& o = outcomes[i];
    csv += fmt::format("{},{},{},{},{}\n", fmtDouble(points[i].trefi), points[i].reset ? 1 : 0, o.optR1,
                       o.attackRounds, o.tMax);
    rows.push_back({{"tbWindowTrefi", points[i].trefi}, {"reset", points[i].reset}, {"tMax", o.tMax}});
  }
  ctx.out.write("analyze.csv", csv);
  ctx.results["points"] = rows;

  // Monotone in the window for each reset mode; reset never above no-reset.
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (points[i].reset == points[j].reset && points[i].trefi < points[j].trefi &&
          outcomes[i].tMax > outcomes[j].tMax)
        ctx.fail(fmt::format("tMax not monotone between {} and {} tREFI", points[i].trefi, points[j].trefi));
      if (points[i].trefi == points[j].trefi && points[i].reset && !points[j].reset &&
          outcomes[i].tMax > outcomes[j].tMax)
        ctx.fail(fmt::format("reset tMax above no-reset at {} tREFI", points[i].trefi));
    }
  }
}

void runSolveWindow(RunContext& ctx) {
  const auto& c = ctx.cfg;
  struct Point {
    std::uint32_t nBO;
    bool reset;
  };
  std::vector<Point> points;
  for (auto n : c.solveWindow.nBO)
    for (bool r : c.solveWindow.reset) points.push_back({n, r});
  const auto windows = sweep<std::optional<Ns>>(points.size(), [&](std::size_t i) -> std::optional<Ns> {
    try {
      return tprac::configureFromAnalysis(points[i].nBO, c.timings, points[i].reset, c.solverConvention,
                                          c.solveWindow.rowsPerBank);
    } catch (const NoSafeWindow&) {
      return std::nullopt;
    }
  });
  std::string csv = "n_bo,reset,convention,tb_window_ns,tb_window_trefi,bandwidth_loss\n";
  json rows = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto conv = analysis::toString(c.solverConvention);
    if (!windows[i]) {
      csv += fmt::format("{},{},{},,,\n", points[i].nBO, points[i].reset ? 1 : 0, conv);
      ctx.fail(fmt::format("no safe window for nBO {}", points[i].nBO));
      continue;
    }
    const Ns w = *windows[i];
    const double trefi = static_cast<double>(w) / static_cast<double>(c.timings.tREFI);
    const double loss = tprac::bandwidthLoss(w, c.timings);
    csv += fmt::format("{},{},{},{},{},{}\n", points[i].nBO, points[i].reset ? 1 : 0, conv, w, fmtDouble(trefi),
                       fmtDouble(loss));
    rows.push_back({{"nBO", points[i].nBO}, {"reset", points[i].reset}, {"tbWindowNs", w}, {"bandwidthLoss", loss}});
  }
  ctx.out.write("window.csv", csv);
  ctx.results["windows"] = rows;
}

void runFeintingSim(RunContext& ctx) {
  const auto& c = ctx.cfg;
  std::optional<Ns> window;
  if (c.tbWindow) window = resolveWindow(ctx, c.prac.nBO, c.prac.resetPolicy == prac::ResetPolicy::PerTrefw);
  struct Point {
    analysis::AttackPattern pattern;
    std::int64_t r1;
  };
  std::vector<Point> points;
  for (auto p : c.feintingSim.patterns)
    for (auto r : c.feintingSim.r1) points.push_back({p, r});
  const auto results = sweep<analysis::FeintingSimResult>(points.size(), [&](std::size_t i) {
    analysis::FeintingSimConfig f;
    f.timings = c.feintingSim.noRefresh ? dram::noRefreshTimings(c.timings) : c.timings;
    f.numBanks = c.geometry.numBanks;
    f.rowsPerBank = c.geometry.rowsPerBank;
    f.prac = c.prac;
    f.tbWindow = window;
    f.pattern = points[i].pattern;
    f.r1 = points[i].r1;
    f.seed = c.seed;
    f.windows = c.feintingSim.windows;
    f.decoyRounds = c.feintingSim.decoyRounds;
    return analysis::feintingSimulate(f);
  });
  std::string csv = "pattern,r1,tb_window_ns,target_max,alerts,activations,tb_rfms\n";
  std::uint64_t alerts = 0;
  std::int64_t worst = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = results[i];
    csv += fmt::format("{},{},{},{},{},{},{}\n", analysis::toString(points[i].pattern), points[i].r1,
                       window ? std::to_string(*window) : std::string(), r.targetMax, r.alerts, r.activations,
                       r.tbRfms);
    alerts += r.alerts;
    worst = std::max(worst, r.targetMax);
  }
  ctx.out.write("feinting.csv", csv);
  ctx.results["alerts"] = alerts;
  ctx.results["maxTargetCount"] = worst;
  if (window && alerts > 0) ctx.fail(fmt::format("{} alerts under TB-RFM", alerts));
}

void runLatency(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto base = attackSetup(ctx, prac::ResetPolicy::OnMitigationOnly);
  const auto results = sweep<attacks::LatencyResult>(c.latency.nMit.size(), [&](std::size_t i) {
    attacks::LatencyConfig l;
    l.setup = base;
    l.setup.nMit = c.latency.nMit[i];
    l.setup.logEvents = c.events && i == 0;
    l.bursts = c.latency.bursts;
    l.idleGap = c.latency.idleGapNs;
    l.triggerActive = c.latency.triggerActive;
    return attacks::runLatencyCharacterization(l);
  });
  std::string csv = "n_mit,avg_ns_idle,avg_ns_abo\n";
  json rows = json::array();
  for (const auto& r : results) {
    csv += fmt::format("{},{:.3f},{:.3f}\n", r.nMit, r.avgNsIdle, r.avgNsAbo);
    rows.push_back({{"nMit", r.nMit}, {"avgNsIdle", r.avgNsIdle}, {"avgNsAbo", r.avgNsAbo}, {"aboBursts", r.aboBursts}});
  }
  ctx.out.write("latency.csv", csv);
  if (c.events && !results.empty()) ctx.out.write("events.csv", results.front().eventsCsv);
  ctx.results["points"] = rows;
  if (c.latency.triggerActive && c.defense == sim::Defense::AboOnly) {
    for (std::size_t i = 0; i < results.size(); ++i)
      for (std::size_t j = 0; j < results.size(); ++j)
        if (results[i].nMit < results[j].nMit && results[i].avgNsAbo >= results[j].avgNsAbo)
          ctx.fail("ABO latency not increasing in nMit");
  }
}

void runCovert(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto base = attackSetup(ctx, prac::ResetPolicy::OnMitigationOnly);
  std::vector<bool> payload(c.covert.bits);
  auto rng = deriveStream(c.seed, 0xC0);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = (rng() & 1u) != 0;
  struct Point {
    attacks::CovertMode mode;
    std::uint32_t nBO;
  };
  std::vector<Point> points;
  for (auto m : c.covert.modes)
    for (auto n : c.covert.nBO) points.push_back({m, n});
  if (c.defense == sim::Defense::Tprac && c.tbWindow->automatic) base.tbWindow.reset();
  const auto results = sweep<attacks::CovertResult>(points.size(), [&](std::size_t i) {
    attacks::CovertConfig cc;
    cc.mode = points[i].mode;
    cc.nBO = points[i].nBO;
    cc.payload = payload;
    cc.windowNs = c.covert.windowNs;
    return attacks::runCovertChannel(cc, base);
  });
  std::string csv = "mode,n_bo,period_ns,bitrate_bps,error_rate\n";
  json rows = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = results[i];
    csv += fmt::format("{},{},{},{},{}\n", attacks::toString(points[i].mode), points[i].nBO, r.symbolPeriodNs,
                       fmtDouble(r.bitrateBps), fmtDouble(r.errorRate));
    rows.push_back({{"mode", attacks::toString(points[i].mode)},
                    {"nBO", points[i].nBO},
                    {"bitsPerSymbol", r.bitsPerSymbol},
                    {"errorRate", r.errorRate},
                    {"alerts", r.alerts}});
    if (c.defense == sim::Defense::AboOnly && r.errorRate != 0.0)
      ctx.fail(fmt::format("{} channel at nBO {} has error rate {}", attacks::toString(points[i].mode), points[i].nBO,
                           r.errorRate));
  }
  ctx.out.write("covert_result.csv", csv);
  ctx.results["points"] = rows;
}

attacks::AesBlock parseKey(const std::string& hex) {
  attacks::AesBlock k{};
  for (std::size_t i = 0; i < 16; ++i) k[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  return k;
}

void runAes(RunContext& ctx) {
  const auto& c = ctx.cfg;
  auto setup = attackSetup(ctx, prac::ResetPolicy::PerTrefw);
  std::vector<attacks::AesBlock> keys;
  for (const auto& k : c.aes.keys) keys.push_back(parseKey(k));
  auto rng = deriveStream(c.seed, 0xAE5);
  for (int i = 0; i < c.aes.randomKeys; ++i) {
    attacks::AesBlock k{};
    for (auto& b : k) b = static_cast<std::uint8_t>(rng() & 0xFF);
    keys.push_back(k);
  }
  const auto results = sweep<attacks::KeyRecovery>(keys.size(), [&](std::size_t i) {
    return attacks::recoverKeyNibbles(keys[i], c.aes.encryptions, setup, c.seed, c.aes.fixedPlaintextByte);
  });
  std::string csv = "byte_index,true_nibble,recovered_nibble,probes,encryptions\n";
  int correct = 0, total = 0;
  std::uint64_t alerts = 0;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    for (int b = 0; b < 16; ++b) {
      const auto& run = results[k].runs[b];
      const int truth = keys[k][b] >> 4;
      const auto& got = results[k].nibbles[b];
      csv += fmt::format("{},{},{},{},{}\n", b, truth, got ? static_cast<int>(*got) : -1, run.totalProbes,
                         c.aes.encryptions);
      correct += got && *got == truth;
      ++total;
    }
    alerts += results[k].alerts;
  }
  ctx.out.write("aes_result.csv", csv);
  const double accuracy = total ? static_cast<double>(correct) / total : 0.0;
  ctx.results["accuracy"] = accuracy;
  ctx.results["alerts"] = alerts;
  ctx.results["keys"] = keys.size();
  if (c.defense == sim::Defense::AboOnly && accuracy < 1.0) ctx.fail(fmt::format("accuracy {} below 1", accuracy));
  if (c.defense == sim::Defense::Tprac && (accuracy > 0.2 || alerts > 0))
    ctx.fail(fmt::format("defense leaks: accuracy {}, alerts {}", accuracy, alerts));
}

std::string utcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int runExperiment(ExperimentKind kind, const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = loadConfig(options.configPath);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  return runExperiment(kind, std::move(cfg), options, out, err);
}

int runExperiment(ExperimentKind kind, ExperimentConfig cfg, const RunOptions& options, std::ostream& out,
                  std::ostream& err) {
  try {
    if (cfg.kind && *cfg.kind != kind)
      throw ConfigError("experiment", fmt::format("config is for \"{}\" but the subcommand is \"{}\"",
                                                  toString(*cfg.kind), toString(kind)));
    cfg.kind = kind;
    if (options.seed) cfg.seed = *options.seed;
    if (options.tbWindow) {
      cfg.tbWindowText = *options.tbWindow;
      cfg.tbWindow = parseTbWindow(*options.tbWindow, cfg.timings);
    }
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::filesystem::path dir = ".";
  if (options.outDir) {
    dir = *options.outDir;
  } else if (const char* env = std::getenv("PRAC_LAB_OUT"); env && *env) {
    dir = env;
  }

  try {
    std::filesystem::create_directories(dir);
    Outputs outputs(dir);
    RunContext ctx{cfg, outputs, json::object(), nullptr, true, {}};
    switch (kind) {
      case ExperimentKind::Analyze: runAnalyze(ctx); break;
      case ExperimentKind::SolveWindow: runSolveWindow(ctx); break;
      case ExperimentKind::FeintingSim: runFeintingSim(ctx); break;
      case ExperimentKind::Latency: runLatency(ctx); break;
      case ExperimentKind::Covert: runCovert(ctx); break;
      case ExperimentKind::Aes: runAes(ctx); break;
    }
    json manifest;
    manifest["tool"] = "prac-lab";
    manifest["version"] = PRACLAB_VERSION;
    manifest["experiment"] = toString(kind);
    manifest["seed"] = cfg.seed;
    manifest["timestamp"] = utcTimestamp();
    manifest["config"] = toJson(cfg);
    manifest["tbWindow"] = ctx.window;
    manifest["results"] = ctx.results;
    manifest["check"] = {{"enabled", cfg.check}, {"passed", ctx.checkPassed}, {"failures", ctx.checkFailures}};
    auto files = outputs.files();
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    outputs.write("manifest.json", manifest.dump(2) + "\n");

    out << fmt::format("{}: wrote {} file(s) to {}\n", toString(kind), files.size(), dir.string());
    if (cfg.check && !ctx.checkPassed) {
      for (const auto& f : ctx.checkFailures) err << "check failed: " << f << '\n';
      return kExitCheckFailed;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidGeometry& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NoSafeWindow& e) {
    err << "config error: tbWindow: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace praclab::cli
