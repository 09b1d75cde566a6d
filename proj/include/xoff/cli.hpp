#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace xoff {

enum class Command { kIngest, kTrain, kEvaluate, kMatrix, kFewshot, kAugment, kAttribute, kReport };

struct CliInvocation {
  Command command = Command::kTrain;
  std::filesystem::path config_path;
  std::vector<std::string> overrides;  // --set key=value
  std::optional<std::uint64_t> seed;
  bool force = false;
  int jobs = 1;
  int repeat = 1;
  bool quiet = false;

  // ingest
  std::filesystem::path data_dir;
  std::vector<std::string> languages;

  // evaluate, attribute
  std::filesystem::path checkpoint;
  std::optional<std::string> input;
  std::optional<std::size_t> false_positives;
  int steps = 50;
  bool no_color = false;
  std::optional<std::filesystem::path> output;

  // attribute and report
  std::string format;
  std::filesystem::path results_dir;
};

// Throws UsageError on unknown commands, options or malformed values. Returns
// nullopt when help was requested (and printed to `out`).
std::optional<CliInvocation> parse_command_line(int argc, const char* const* argv,
                                                std::ostream& out);

// Runs the invocation. Errors propagate as xoff::Error.
void dispatch(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

// Parse + dispatch. Every failure becomes one "error: <category>: <message>"
// line on `err` and the category's exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xoff
