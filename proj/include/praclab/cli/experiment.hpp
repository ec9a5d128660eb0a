#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "praclab/cli/config.hpp"

namespace praclab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheckFailed = 3;

struct RunOptions {
  std::filesystem::path configPath;
  std::optional<std::filesystem::path> outDir;  // falls back to $PRAC_LAB_OUT, then "."
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tbWindow;
};

// Loads the config, runs `kind`, writes CSVs and manifest.json. Diagnostics
// go to `err`, a one-line summary to `out`.
int runExperiment(ExperimentKind kind, const RunOptions& options, std::ostream& out, std::ostream& err);

// Same, on an already parsed config (options.configPath is ignored).
int runExperiment(ExperimentKind kind, ExperimentConfig config, const RunOptions& options, std::ostream& out,
                  std::ostream& err);

}  // namespace praclab::cli
