#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/classifier.hpp"
#include "xoff/corpus.hpp"
#include "xoff/metrics.hpp"
#include "xoff/synthetic.hpp"

namespace xoff {

enum class ExperimentKind {
  kMonolingual,
  kJointAll,
  kZeroShotMatrix,
  kFewShotCurve,
  kAugmentation,
};

std::string_view experiment_kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

// Where the per-language corpora come from.
struct DataSource {
  enum class Format { kOlidTsv, kSynthetic };
  Format format = Format::kOlidTsv;
  // OLID: one directory per language code under root.
  std::filesystem::path root = "data";
  // Synthetic: sizes and seed shared by every language.
  SyntheticOptions synthetic;
  // Synthetic: language -> language whose lexicon it borrows.
  std::map<Language, Language> shared_lexicons;

  friend bool operator==(const DataSource&, const DataSource&) = default;
};

// Per kind:
//   monolingual      one run per train language, tested on its own test split
//   joint_all        one model on all train languages, one record per test language
//   zero_shot_matrix one model per train language plus the joint row
//   few_shot_curve   augment_base sliced by each fraction, optionally + augment_with
//   augmentation     augment_base + augment_with, tested on augment_base
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kMonolingual;
  std::vector<Language> train_languages;  // sorted, unique
  std::vector<Language> test_languages;   // sorted, unique
  std::optional<std::vector<double>> fractions;
  std::optional<Language> augment_base;
  std::optional<Language> augment_with;
  ModelConfig model;
  TrainingConfig training;
  std::filesystem::path output_dir = "results";
  DataSource data;

  // Throws ConfigError naming the violated field.
  void validate() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

// Stable content hash of the spec. Key order in the source document does not
// matter; the training seed and output_dir are excluded so repeated seeds of
// one experiment share a hash.
std::string spec_hash(const ExperimentSpec& spec);

struct RunRecord {
  std::string spec_hash;
  ExperimentKind kind = ExperimentKind::kMonolingual;
  // Row label: a language code, "all", or "<base>+<helper>".
  std::string setting;
  std::vector<Language> train_languages;
  Language test_language = Language::english();
  std::optional<double> fraction;
  std::optional<Language> helper;
  std::size_t train_size = 0;
  MetricsReport metrics;
  // Relative to the results directory.
  std::filesystem::path checkpoint_ref;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  std::string data_hash;

  // Everything except wall_time, which no two runs share.
  friend bool operator==(const RunRecord& a, const RunRecord& b);
};

// Complete grid: one row per training language then "all", one column per
// test language.
struct ResultsMatrix {
  std::vector<std::string> rows;
  std::vector<Language> columns;
  std::vector<std::vector<std::optional<double>>> cells;

  std::optional<double> cell(std::string_view row, const Language& column) const;
  bool complete() const;
  // Header "setting,<codes...>", cells with 4 decimals, empty when missing.
  std::string to_csv() const;
};

using ProgressLog = std::function<void(const std::string&)>;

// Shared by every run of one experiment.
struct RunContext {
  // Empty: nothing is written to disk.
  std::filesystem::path output_dir;
  // Records carry this hash; when empty one is derived from the operation.
  std::string spec_hash;
  bool force = false;
  bool save_checkpoints = true;
  // Independent runs executed concurrently.
  int jobs = 1;
  ProgressLog log;
};

// Corpora for every language the spec touches. Throws IngestionError.
CorpusCatalog load_catalog(const ExperimentSpec& spec);

RunRecord run_monolingual(const Language& language, const CorpusCatalog& catalog,
                          const ModelConfig& model, const TrainingConfig& training,
                          const RunContext& context = {});

std::vector<RunRecord> run_joint_all(const CorpusCatalog& catalog,
                                     const ModelConfig& model,
                                     const TrainingConfig& training,
                                     const RunContext& context = {});

// On failure writes partial_manifest.json (completed cells plus the error)
// before rethrowing.
ResultsMatrix run_zero_shot_matrix(const CorpusCatalog& catalog,
                                   const ModelConfig& model,
                                   const TrainingConfig& training,
                                   const RunContext& context = {},
                                   std::vector<RunRecord>* records = nullptr);

std::vector<RunRecord> run_few_shot_curve(const Language& base,
                                          const std::optional<Language>& helper,
                                          std::span<const double> fractions,
                                          const CorpusCatalog& catalog,
                                          const ModelConfig& model,
                                          const TrainingConfig& training,
                                          const RunContext& context = {});

RunRecord run_augmentation(const Language& base, const Language& helper,
                           const CorpusCatalog& catalog, const ModelConfig& model,
                           const TrainingConfig& training,
                           const RunContext& context = {});

// Runs whatever the spec's kind asks for.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec,
                                      const CorpusCatalog& catalog,
                                      const RunContext& context);

// runs/<spec_hash>-s<seed>-<setting>-on-<test>[-f<fraction>].json under
// output_dir. Refuses to overwrite unless `force`.
std::filesystem::path persist_run(const RunRecord& record,
                                  const std::filesystem::path& output_dir,
                                  bool force = false);
std::filesystem::path run_record_path(const RunRecord& record,
                                      const std::filesystem::path& output_dir);
RunRecord read_run(const std::filesystem::path& file);
// Every record under <results_dir>/runs, ordered by file name.
std::vector<RunRecord> load_runs(const std::filesystem::path& results_dir);

std::string run_record_json(const RunRecord& record);

// Rows and columns from zero-shot, joint and monolingual records; repeated
// seeds are averaged.
ResultsMatrix matrix_from_records(std::span<const RunRecord> records);
// fraction,helper,train_size,macro_f1; repeated seeds averaged.
std::string fewshot_csv(std::span<const RunRecord> records);

}  // namespace xoff
