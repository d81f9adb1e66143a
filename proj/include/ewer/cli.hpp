#pragma once

// Command-line driver: gen, label, sample, split, train, predict, evaluate,
// gradcheck. Logs go to `log` as one `event=... key=value` line per event.

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ewer/error.hpp"
#include "ewer/estimator.hpp"

namespace ewer::cli {

class UsageError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Reads flat `key = value` lines; `#` starts a comment. Throws UsageError
/// naming the file and line of a malformed entry.
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

/// Prediction JSONL, one {"id", "pred", "dur"} object per line.
void save_predictions(std::span<const Prediction> predictions, const std::filesystem::path& path);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// `args` excludes the program name; args[0] is the subcommand.
int run(std::span<const std::string> args, std::ostream& log);

}  // namespace ewer::cli
