#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "praclab/cli/experiment.hpp"

using namespace praclab;
using namespace praclab::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("prac_lab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path writeConfig(const fs::path& dir, const std::string& text) {
  auto p = dir / "config.json";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

struct Proc {
  int code = -1;
  std::string err;
};

// Runs the built binary; stderr is captured through a file.
Proc runBinary(const std::string& args, const fs::path& dir) {
  const char* bin = std::getenv("PRAC_LAB_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "PRAC_LAB_BIN not set");
  const auto errPath = dir / "stderr.txt";
  const std::string cmd = std::string(bin) + " " + args + " > /dev/null 2> " + errPath.string();
  const int status = std::system(cmd.c_str());
  Proc p;
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  p.err = slurp(errPath);
  return p;
}

struct InProc {
  int code;
  std::string out, err;
};

InProc run(ExperimentKind kind, const json& doc, const fs::path& outDir) {
  RunOptions o;
  o.outDir = outDir;
  std::ostringstream out, err;
  const int code = runExperiment(kind, parseConfig(doc), o, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

json withoutTimestamp(const fs::path& manifest) {
  auto j = json::parse(slurp(manifest));
  j.erase("timestamp");
  return j;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("window syntax") {
    const dram::TimingParams t;
    CHECK(parseTbWindow("auto", t).automatic);
    CHECK(parseTbWindow("1tREFI", t).ns == 3900);
    CHECK(parseTbWindow("0.25tREFI", t).ns == 975);
    CHECK(parseTbWindow("7020", t).ns == 7020);
    CHECK_THROWS_AS(parseTbWindow("fast", t), ConfigError);
    CHECK_THROWS_AS(parseTbWindow("-3tREFI", t), ConfigError);
  }

  TEST_CASE("config errors name the field") {
    try {
      parseConfig(json::parse(R"({"experiment":"analyze","prac":{"nbo":5}})"));
      FAIL("accepted an unknown key");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "prac.nbo");
    }
    try {
      parseConfig(json::parse(R"({"experiment":"analyze","seed":"x"})"));
      FAIL("accepted a string seed");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "seed");
    }
    try {
      parseConfig(json::parse(R"({"experiment":"covert","tbWindow":"auto"})"));
      FAIL("accepted auto without TB-RFMs");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "tbWindow");
    }
    auto c = parseConfig(json::parse(R"({"experiment":"covert","tbWindow":"auto","defense":"tprac"})"));
    CHECK(c.tbWindow->automatic);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("binary: empty config exits 2") {
    auto dir = scratch("empty");
    auto cfg = writeConfig(dir, "");
    auto p = runBinary("analyze --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(p.code == kExitConfig);
    CHECK_FALSE(p.err.empty());
  }

  TEST_CASE("binary: unknown key exits 2 with the field") {
    auto dir = scratch("unknown");
    auto cfg = writeConfig(dir, R"({"experiment":"analyze","tbWindw":"1tREFI"})");
    auto p = runBinary("analyze --config " + cfg.string() + " --out " + dir.string(), dir);
    CHECK(p.code == kExitConfig);
    CHECK(p.err.find("tbWindw") != std::string::npos);
  }

  TEST_CASE("binary: missing config and bad flags exit 2") {
    auto dir = scratch("flags");
    CHECK(runBinary("analyze --config " + (dir / "nope.json").string(), dir).code == kExitConfig);
    CHECK(runBinary("no-such-command", dir).code == kExitConfig);
    auto cfg = writeConfig(dir, R"({"experiment":"analyze"})");
    CHECK(runBinary("analyze --config " + cfg.string() + " --tb-window bogus --out " + dir.string(), dir).code ==
          kExitConfig);
  }

  TEST_CASE("binary: analyze writes the six-row sweep and a manifest") {
    auto dir = scratch("analyze");
    auto cfg = writeConfig(dir, R"({"experiment":"analyze","analyze":{"tbWindowsTrefi":[0.25,1,4]}})");
    auto p = runBinary("analyze --config " + cfg.string() + " --out " + dir.string() + " --seed 9", dir);
    REQUIRE(p.code == kExitOk);
    auto rows = lines(slurp(dir / "analyze.csv"));
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "tb_window_trefi,reset,opt_r1,attack_rounds,t_max");
    // Worst cases: 118/736/3221 without reset, 105/571/2138 with reset.
    std::vector<std::int64_t> tmax;
    for (std::size_t i = 1; i < rows.size(); ++i) tmax.push_back(std::stoll(rows[i].substr(rows[i].rfind(',') + 1)));
    std::sort(tmax.begin(), tmax.end());
    CHECK(tmax == std::vector<std::int64_t>{105, 118, 571, 736, 2138, 3221});
    auto m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["seed"] == 9);
    CHECK(m["experiment"] == "analyze");
    CHECK(m.contains("version"));
    CHECK(m.contains("timestamp"));
    CHECK(m["config"]["analyze"]["tbWindowsTrefi"].size() == 3);
  }

  TEST_CASE("output dir falls back to PRAC_LAB_OUT") {
    auto dir = scratch("envout");
    auto cfg = writeConfig(dir, R"({"experiment":"analyze","analyze":{"tbWindowsTrefi":[1],"reset":[true]}})");
    ::setenv("PRAC_LAB_OUT", (dir / "out").string().c_str(), 1);
    RunOptions o;
    o.configPath = cfg;
    std::ostringstream out, err;
    const int code = runExperiment(ExperimentKind::Analyze, o, out, err);
    ::unsetenv("PRAC_LAB_OUT");
    CHECK(code == kExitOk);
    CHECK(fs::exists(dir / "out" / "analyze.csv"));
  }

  TEST_CASE("reproducible outputs") {
    const json doc = json::parse(R"({"experiment":"feinting-sim","seed":42,
      "prac":{"nBO":4000,"aboEnabled":false},"tbWindow":"1tREFI","defense":"tprac",
      "feintingSim":{"patterns":["random","feinting"],"r1":[8,64],"windows":12}})");
    auto a = scratch("repro_a"), b = scratch("repro_b");
    REQUIRE(run(ExperimentKind::FeintingSim, doc, a).code == kExitOk);
    REQUIRE(run(ExperimentKind::FeintingSim, doc, b).code == kExitOk);
    CHECK(slurp(a / "feinting.csv") == slurp(b / "feinting.csv"));
    CHECK(withoutTimestamp(a / "manifest.json") == withoutTimestamp(b / "manifest.json"));
  }

  TEST_CASE("sweep equals its single-point runs") {
    const json base = json::parse(R"({"experiment":"feinting-sim","seed":7,
      "prac":{"nBO":4000,"aboEnabled":false},"tbWindow":"1tREFI","defense":"tprac",
      "feintingSim":{"patterns":["random"],"windows":10}})");
    json sweep = base;
    sweep["feintingSim"]["r1"] = {4, 32, 100};
    auto dir = scratch("sweep");
    REQUIRE(run(ExperimentKind::FeintingSim, sweep, dir).code == kExitOk);
    auto all = lines(slurp(dir / "feinting.csv"));
    std::vector<std::string> joined{all.at(0)};
    for (int r1 : {4, 32, 100}) {
      json one = base;
      one["feintingSim"]["r1"] = {r1};
      auto d = scratch("sweep_" + std::to_string(r1));
      REQUIRE(run(ExperimentKind::FeintingSim, one, d).code == kExitOk);
      auto l = lines(slurp(d / "feinting.csv"));
      CHECK(l.at(0) == joined[0]);
      joined.insert(joined.end(), l.begin() + 1, l.end());
    }
    CHECK(all == joined);
  }

  TEST_CASE("latency and covert CSV layouts") {
    auto dir = scratch("lat");
    json lat = {{"experiment", "latency"}, {"latency", {{"nMit", {1, 4}}, {"bursts", 2}}}};
    REQUIRE(run(ExperimentKind::Latency, lat, dir).code == kExitOk);
    auto l = lines(slurp(dir / "latency.csv"));
    REQUIRE(l.size() == 3);
    CHECK(l[0] == "n_mit,avg_ns_idle,avg_ns_abo");
    CHECK(l[1].rfind("1,", 0) == 0);

    json cov = {{"experiment", "covert"}, {"check", true}, {"covert", {{"bits", 40}}}};
    REQUIRE(run(ExperimentKind::Covert, cov, dir).code == kExitOk);
    auto c = lines(slurp(dir / "covert_result.csv"));
    REQUIRE(c.size() == 3);
    CHECK(c[0] == "mode,n_bo,period_ns,bitrate_bps,error_rate");
    CHECK(c[1].substr(c[1].rfind(',') + 1) == "0");
  }

  TEST_CASE("aes under TB-RFMs records a low accuracy") {
    auto dir = scratch("aes");
    json doc = {{"experiment", "aes"}, {"defense", "tprac"}, {"tbWindow", "auto"}, {"check", true},
                {"aes", {{"randomKeys", 2}}}};
    auto r = run(ExperimentKind::Aes, doc, dir);
    CHECK(r.code == kExitOk);
    auto m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["results"]["accuracy"].get<double>() <= 0.2);
    CHECK(m["tbWindow"]["auto"] == true);
    CHECK(m["tbWindow"].contains("bandwidthLoss"));
    CHECK(lines(slurp(dir / "aes_result.csv"))[0] == "byte_index,true_nibble,recovered_nibble,probes,encryptions");
  }

  TEST_CASE("failed check exits 3") {
    auto dir = scratch("check");
    json doc = {{"experiment", "solve-window"}, {"check", true}, {"solveWindow", {{"nBO", {2}}, {"reset", {true}}}}};
    auto r = run(ExperimentKind::SolveWindow, doc, dir);
    CHECK(r.code == kExitCheckFailed);
    CHECK(fs::exists(dir / "manifest.json"));
  }
}
