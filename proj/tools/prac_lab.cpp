#include <iostream>

#include <CLI11.hpp>

#include "praclab/cli/experiment.hpp"

int main(int argc, char** argv) {
  using praclab::cli::ExperimentKind;
  CLI::App app{"PRAC timing-channel lab: DRAM simulator, attacks and TB-RFM analysis"};
  app.set_version_flag("--version", PRACLAB_VERSION);
  app.require_subcommand(1, 1);

  praclab::cli::RunOptions options;
  std::string configPath, outDir, tbWindow;
  std::uint64_t seed = 0;

  const std::pair<ExperimentKind, const char*> kinds[] = {
      {ExperimentKind::Analyze, "closed-form worst-case target activations over TB-Windows"},
      {ExperimentKind::SolveWindow, "largest safe TB-Window for each nBO"},
      {ExperimentKind::FeintingSim, "simulate Feinting and scenario access patterns"},
      {ExperimentKind::Latency, "observer latency with and without ABO bursts"},
      {ExperimentKind::Covert, "activity- and activation-count-based covert channels"},
      {ExperimentKind::Aes, "AES T-table key nibble recovery"},
  };
  for (const auto& [kind, help] : kinds) {
    auto* sub = app.add_subcommand(std::string(praclab::cli::toString(kind)), help);
    sub->add_option("--config", configPath, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", outDir, "output directory (default: $PRAC_LAB_OUT or .)");
    sub->add_option("--seed", seed, "root seed, overrides the config");
    sub->add_option("--tb-window", tbWindow, "TB-Window: <x>tREFI, <ns> or auto");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : praclab::cli::kExitConfig;
  }

  options.configPath = configPath;
  for (auto* sub : app.get_subcommands()) {
    const auto kind = praclab::cli::parseExperimentKind(sub->get_name());
    if (!sub->get_option("--out")->empty()) options.outDir = outDir;
    if (!sub->get_option("--seed")->empty()) options.seed = seed;
    if (!sub->get_option("--tb-window")->empty()) options.tbWindow = tbWindow;
    return praclab::cli::runExperiment(*kind, options, std::cout, std::cerr);
  }
  return praclab::cli::kExitConfig;
}
