#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "praclab/analysis/feinting.hpp"
#include "praclab/analysis/feinting_sim.hpp"
#include "praclab/attacks/covert.hpp"
#include "praclab/dram/timing.hpp"
#include "praclab/prac/prac_engine.hpp"
#include "praclab/sim/system.hpp"

namespace praclab::cli {

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { Analyze, SolveWindow, FeintingSim, Latency, Covert, Aes };

std::string_view toString(ExperimentKind k);
std::optional<ExperimentKind> parseExperimentKind(std::string_view s);

// "auto", "<x>tREFI" or a plain integer number of ns.
struct TbWindowSpec {
  bool automatic = false;
  Ns ns = 0;
};

TbWindowSpec parseTbWindow(const std::string& text, const dram::TimingParams& timings);

struct AnalyzeSection {
  std::vector<double> tbWindowsTrefi{0.25, 0.5, 1, 2, 4};
  std::vector<bool> reset{false, true};
  std::int64_t rowsPerBank = 128 * 1024;
  std::int64_t maxActTrefw = analysis::kDefaultMaxActTrefw;
  analysis::OptR1Rule optR1Rule = analysis::OptR1Rule::RefreshWindowIntervals;
};

struct SolveWindowSection {
  std::vector<std::uint32_t> nBO{1024, 512};
  std::vector<bool> reset{true, false};
  std::int64_t rowsPerBank = 128 * 1024;
};

struct FeintingSimSection {
  std::vector<analysis::AttackPattern> patterns{analysis::AttackPattern::Feinting};
  std::vector<std::int64_t> r1{4};
  std::int64_t windows = 64;
  std::int64_t decoyRounds = 8;
  bool noRefresh = false;  // push refresh out of the run (small analytic cross-checks)
};

struct LatencySection {
  std::vector<int> nMit{1, 2, 4};
  int bursts = 8;
  Ns idleGapNs = 20'000;
  bool triggerActive = true;
};

struct CovertSection {
  std::vector<attacks::CovertMode> modes{attacks::CovertMode::ActivityBased, attacks::CovertMode::ActivationCountBased};
  std::vector<std::uint32_t> nBO{256};
  std::size_t bits = 1000;
  std::optional<Ns> windowNs;
};

struct AesSection {
  int encryptions = 100;
  int randomKeys = 1;
  std::vector<std::string> keys;  // 32 hex digits each
  std::uint8_t fixedPlaintextByte = 0;
};

struct ExperimentConfig {
  std::optional<ExperimentKind> kind;
  std::uint64_t seed = 1;
  dram::TimingParams timings{};
  dram::DramGeometry geometry{32, 32 * 1024};
  prac::PracConfig prac{};
  bool nMitGiven = false;  // attack experiments default to nMit = 4 otherwise
  sim::Defense defense = sim::Defense::AboOnly;
  std::optional<TbWindowSpec> tbWindow;
  std::optional<std::string> tbWindowText;
  std::optional<int> trefPeriod;
  bool trefSkip = false;
  analysis::Convention convention = analysis::Convention::RefreshAware;
  analysis::Convention solverConvention = analysis::Convention::Conservative;
  bool check = false;
  bool events = false;

  AnalyzeSection analyze;
  SolveWindowSection solveWindow;
  FeintingSimSection feintingSim;
  LatencySection latency;
  CovertSection covert;
  AesSection aes;

  void validate() const;
};

ExperimentConfig parseConfig(const nlohmann::json& doc);
ExperimentConfig loadConfig(const std::filesystem::path& path);

// Resolved configuration as written to the manifest.
nlohmann::json toJson(const ExperimentConfig& cfg);

}  // namespace praclab::cli
