#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xoff {

// Every error the library raises belongs to exactly one category, and every
// category maps to exactly one process exit code.
enum class ErrorCategory {
  kUsage,
  kConfig,
  kIngestion,
  kArgument,
  kDivergence,
  kNumeric,
  kCheckpoint,
  kCollision,
  kNoRecords,
  kIo,
  kInternal,
};

std::string_view category_name(ErrorCategory category);
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorCategory::kUsage, m) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& m)
      : Error(ErrorCategory::kConfig, key.empty() ? m : key + ": " + m),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& m)
      : Error(ErrorCategory::kIngestion, m) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& m)
      : Error(ErrorCategory::kArgument, m) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& m)
      : Error(ErrorCategory::kDivergence,
              "step " + std::to_string(step) + ": " + m),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m)
      : Error(ErrorCategory::kNumeric, m) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string& m)
      : Error(ErrorCategory::kCheckpoint, m) {}
};

class CollisionError : public Error {
 public:
  explicit CollisionError(const std::filesystem::path& existing)
      : Error(ErrorCategory::kCollision,
              "refusing to overwrite existing " + existing.string() +
                  " (use --force)"),
        existing_(existing) {}
  const std::filesystem::path& existing() const noexcept { return existing_; }

 private:
  std::filesystem::path existing_;
};

class NoRecordsError : public Error {
 public:
  explicit NoRecordsError(const std::string& m)
      : Error(ErrorCategory::kNoRecords, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCategory::kIo, m) {}
};

}  // namespace xoff
