#include "xoff/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "xoff/error.hpp"
#include "xoff/experiment_config.hpp"
#include "xoff/hash.hpp"
#include "xoff/random.hpp"
#include "xoff/serialization.hpp"

namespace xoff {

namespace fs = std::filesystem;

std::string_view experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kMonolingual: return "monolingual";
    case ExperimentKind::kJointAll: return "joint_all";
    case ExperimentKind::kZeroShotMatrix: return "zero_shot_matrix";
    case ExperimentKind::kFewShotCurve: return "few_shot_curve";
    case ExperimentKind::kAugmentation: return "augmentation";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::kMonolingual, ExperimentKind::kJointAll,
                 ExperimentKind::kZeroShotMatrix, ExperimentKind::kFewShotCurve,
                 ExperimentKind::kAugmentation}) {
    if (experiment_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

// Validation messages lead with the field they reject when there is one.
std::string offending_key(const std::string& section, const Json& fields,
                          const std::string& message) {
  const std::string word = message.substr(0, message.find(' '));
  return fields.contains(word) ? section + "." + word : section;
}

}  // namespace

void ExperimentSpec::validate() const {
  const bool sliced = kind == ExperimentKind::kFewShotCurve ||
                      kind == ExperimentKind::kAugmentation;
  if (train_languages.empty()) throw ConfigError("train_languages", "must not be empty");
  if (!std::is_sorted(train_languages.begin(), train_languages.end()) ||
      std::adjacent_find(train_languages.begin(), train_languages.end()) != train_languages.end()) {
    throw ConfigError("train_languages", "must be a set");
  }
  if (fractions && kind != ExperimentKind::kFewShotCurve) {
    throw ConfigError("fractions", "only allowed for few_shot_curve");
  }
  if (!sliced && (augment_base || augment_with)) {
    throw ConfigError(augment_base ? "augment_base" : "augment_with",
                      "only allowed for few_shot_curve and augmentation");
  }
  if (sliced) {
    if (!augment_base) throw ConfigError("augment_base", "required for " +
                                         std::string(experiment_kind_name(kind)));
    if (kind == ExperimentKind::kAugmentation && !augment_with) {
      throw ConfigError("augment_with", "required for augmentation");
    }
    if (augment_with && *augment_with == *augment_base) {
      throw ConfigError("augment_with", "must differ from augment_base");
    }
    std::vector<Language> expected{*augment_base};
    if (augment_with) expected.push_back(*augment_with);
    std::sort(expected.begin(), expected.end());
    if (train_languages != expected) {
      throw ConfigError("train_languages", "must be exactly augment_base and augment_with");
    }
    if (test_languages != std::vector<Language>{*augment_base}) {
      throw ConfigError("test_languages", "must be exactly augment_base");
    }
  } else {
    if (test_languages != train_languages) {
      throw ConfigError("test_languages", "must equal train_languages for " +
                                              std::string(experiment_kind_name(kind)));
    }
    if (kind != ExperimentKind::kMonolingual && train_languages.size() < 2) {
      throw ConfigError("train_languages", "needs at least two languages");
    }
  }
  if (kind == ExperimentKind::kFewShotCurve) {
    if (!fractions || fractions->empty()) throw ConfigError("fractions", "required for few_shot_curve");
    double previous = 0.0;
    for (double f : *fractions) {
      if (!(f > previous && f <= 1.0)) {
        throw ConfigError("fractions", "must be strictly increasing in (0, 1]");
      }
      previous = f;
    }
  }
  try {
    model.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(offending_key("model", to_json(model), e.what()), e.what());
  }
  try {
    training.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(offending_key("training", to_json(training), e.what()), e.what());
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

std::string spec_hash(const ExperimentSpec& spec) {
  Json j = spec_to_json(spec);
  j["training"].erase("seed");
  j.erase("output_dir");
  // Object keys serialize sorted, so the source key order never matters.
  return ContentHash().update(j.dump()).hex();
}

bool operator==(const RunRecord& a, const RunRecord& b) {
  return a.spec_hash == b.spec_hash && a.kind == b.kind && a.setting == b.setting &&
         a.train_languages == b.train_languages && a.test_language == b.test_language &&
         a.fraction == b.fraction && a.helper == b.helper &&
         a.train_size == b.train_size && a.metrics == b.metrics &&
         a.checkpoint_ref == b.checkpoint_ref && a.seed == b.seed &&
         a.data_hash == b.data_hash;
}

// ---------------------------------------------------------------------------
// Results matrix

std::optional<double> ResultsMatrix::cell(std::string_view row,
                                          const Language& column) const {
  const auto r = std::find(rows.begin(), rows.end(), row);
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) return std::nullopt;
  return cells[static_cast<std::size_t>(r - rows.begin())]
              [static_cast<std::size_t>(c - columns.begin())];
}

bool ResultsMatrix::complete() const {
  if (cells.size() != rows.size()) return false;
  for (const auto& row : cells) {
    if (row.size() != columns.size()) return false;
    for (const auto& v : row) {
      if (!v) return false;
    }
  }
  return true;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string ResultsMatrix::to_csv() const {
  std::string out = "setting";
  for (const auto& c : columns) out += "," + c.code();
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += rows[r];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out += ",";
      if (cells[r][c]) out += fixed4(*cells[r][c]);
    }
    out += "\n";
  }
  return out;
}

namespace {

// Language codes in language order, then "all", then combined settings.
bool setting_less(const std::string& a, const std::string& b) {
  auto rank = [](const std::string& s) -> std::pair<int, std::optional<Language>> {
    if (s == "all") return {1, std::nullopt};
    try {
      return {0, Language::parse(s)};
    } catch (const Error&) {
      return {2, std::nullopt};
    }
  };
  const auto ra = rank(a), rb = rank(b);
  if (ra.first != rb.first) return ra.first < rb.first;
  if (ra.first == 0) return *ra.second < *rb.second;
  return a < b;
}

}  // namespace

ResultsMatrix matrix_from_records(std::span<const RunRecord> records) {
  std::map<std::pair<std::string, Language>, std::pair<double, int>> sums;
  std::set<std::string> settings;
  std::set<Language> columns;
  for (const auto& r : records) {
    if (r.kind != ExperimentKind::kZeroShotMatrix && r.kind != ExperimentKind::kJointAll &&
        r.kind != ExperimentKind::kMonolingual) {
      continue;
    }
    settings.insert(r.setting);
    columns.insert(r.test_language);
    auto& s = sums[{r.setting, r.test_language}];
    s.first += r.metrics.macro_f1;
    s.second += 1;
  }
  ResultsMatrix m;
  m.rows.assign(settings.begin(), settings.end());
  std::sort(m.rows.begin(), m.rows.end(), setting_less);
  m.columns.assign(columns.begin(), columns.end());
  m.cells.assign(m.rows.size(), std::vector<std::optional<double>>(m.columns.size()));
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      const auto it = sums.find({m.rows[r], m.columns[c]});
      if (it != sums.end()) m.cells[r][c] = it->second.first / it->second.second;
    }
  }
  return m;
}

std::string fewshot_csv(std::span<const RunRecord> records) {
  struct Acc {
    double sum = 0.0;
    int count = 0;
    std::size_t train_size = 0;
  };
  std::map<std::pair<std::string, double>, Acc> rows;
  for (const auto& r : records) {
    if (r.kind != ExperimentKind::kFewShotCurve || !r.fraction) continue;
    auto& a = rows[{r.helper ? r.helper->code() : "none", *r.fraction}];
    a.sum += r.metrics.macro_f1;
    a.count += 1;
    a.train_size = r.train_size;
  }
  std::string out = "fraction,helper,train_size,macro_f1\n";
  for (const auto& [key, a] : rows) {
    out += fixed4(key.second) + "," + key.first + "," + std::to_string(a.train_size) + "," +
           fixed4(a.sum / a.count) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

Json record_to_json(const RunRecord& r) {
  Json langs = Json::array();
  for (const auto& l : r.train_languages) langs.push_back(l.code());
  return {{"spec_hash", r.spec_hash},
          {"kind", experiment_kind_name(r.kind)},
          {"setting", r.setting},
          {"train_languages", langs},
          {"test_language", r.test_language.code()},
          {"fraction", r.fraction ? Json(*r.fraction) : Json(nullptr)},
          {"helper", r.helper ? Json(r.helper->code()) : Json(nullptr)},
          {"train_size", r.train_size},
          {"metrics", to_json(r.metrics)},
          {"checkpoint_ref", r.checkpoint_ref.generic_string()},
          {"wall_time", r.wall_time},
          {"seed", r.seed},
          {"data_hash", r.data_hash}};
}

RunRecord record_from_json(const Json& j, const std::string& source) {
  try {
    ObjectReader rd(j, source);
    RunRecord r;
    rd.require("spec_hash", r.spec_hash);
    std::string kind;
    rd.require("kind", kind);
    const auto k = parse_experiment_kind(kind);
    if (!k) throw ConfigError(rd.child_path("kind"), "unknown experiment kind");
    r.kind = *k;
    rd.require("setting", r.setting);
    std::vector<std::string> langs;
    rd.require("train_languages", langs);
    for (const auto& c : langs) r.train_languages.push_back(Language::parse(c));
    std::string test;
    rd.require("test_language", test);
    r.test_language = Language::parse(test);
    if (rd.has("fraction") && !rd.raw("fraction").is_null()) {
      double f = 0.0;
      rd.read("fraction", f);
      r.fraction = f;
    }
    if (rd.has("helper") && !rd.raw("helper").is_null()) {
      std::string h;
      rd.read("helper", h);
      r.helper = Language::parse(h);
    }
    std::uint64_t train_size = 0;
    rd.require("train_size", train_size);
    r.train_size = static_cast<std::size_t>(train_size);
    if (!rd.has("metrics")) throw ConfigError(rd.child_path("metrics"), "required key is missing");
    r.metrics = metrics_from_json(rd.raw("metrics"), rd.child_path("metrics"));
    std::string ref;
    rd.require("checkpoint_ref", ref);
    r.checkpoint_ref = ref;
    rd.require("wall_time", r.wall_time);
    rd.require("seed", r.seed);
    rd.require("data_hash", r.data_hash);
    rd.finish();
    return r;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(source, e.what());
  }
}

std::string record_stem(const std::string& hash, std::uint64_t seed,
                        const std::string& setting, const std::optional<double>& fraction) {
  std::string stem = hash + "-s" + std::to_string(seed) + "-" + setting;
  if (fraction) stem += "-f" + fixed4(*fraction);
  return stem;
}

}  // namespace

std::string run_record_json(const RunRecord& record) {
  return record_to_json(record).dump(2) + "\n";
}

fs::path run_record_path(const RunRecord& r, const fs::path& output_dir) {
  return output_dir / "runs" /
         (record_stem(r.spec_hash, r.seed, r.setting, r.fraction) + "-on-" +
          r.test_language.code() + ".json");
}

fs::path persist_run(const RunRecord& record, const fs::path& output_dir, bool force) {
  const fs::path file = run_record_path(record, output_dir);
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  if (ec) throw IoError("cannot create " + file.parent_path().string() + ": " + ec.message());
  if (!force) {
    // Exclusive create: an existing record is never touched.
    std::FILE* f = std::fopen(file.string().c_str(), "wx");
    if (f == nullptr) {
      if (fs::exists(file)) throw CollisionError(file);
      throw IoError("cannot write " + file.string());
    }
    const std::string text = run_record_json(record);
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw IoError("cannot write " + file.string());
    return file;
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << run_record_json(record);
  if (!out) throw IoError("cannot write " + file.string());
  return file;
}

RunRecord read_run(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(file.string(), "not valid JSON");
  return record_from_json(j, file.string());
}

std::vector<RunRecord> load_runs(const fs::path& results_dir) {
  const fs::path dir = results_dir / "runs";
  std::vector<fs::path> files;
  std::error_code ec;
  if (fs::is_directory(dir, ec)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
  }
  if (files.empty()) throw NoRecordsError("no run records found under " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_run(f));
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

CorpusCatalog load_catalog(const ExperimentSpec& spec) {
  std::set<Language> languages(spec.train_languages.begin(), spec.train_languages.end());
  languages.insert(spec.test_languages.begin(), spec.test_languages.end());
  CorpusCatalog catalog;
  for (const auto& lang : languages) {
    if (spec.data.format == DataSource::Format::kSynthetic) {
      SyntheticOptions o = spec.data.synthetic;
      if (const auto it = spec.data.shared_lexicons.find(lang);
          it != spec.data.shared_lexicons.end()) {
        o.lexicon_from = it->second;
      }
      catalog.add(make_synthetic_corpus(lang, o));
    } else {
      catalog.add(load_corpus(spec.data.root / lang.code(), lang));
    }
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

using Clock = std::chrono::steady_clock;

const LanguageCorpus& require_language(const CorpusCatalog& catalog, const Language& l) {
  if (!catalog.contains(l)) {
    throw ArgumentError("language " + l.code() + " is not in the catalog");
  }
  return catalog.at(l);
}

std::string operation_hash(std::string_view operation, const CorpusCatalog& catalog,
                           const ModelConfig& model, const TrainingConfig& training) {
  Json t = to_json(training);
  t.erase("seed");
  ContentHash h;
  h.update(operation);
  for (const auto& l : catalog.languages()) {
    h.update(l.code()).update(training_data_hash(catalog.at(l).train));
  }
  h.update(to_json(model).dump()).update(t.dump());
  return h.hex();
}

std::string hash_for(const RunContext& ctx, std::string_view operation,
                     const CorpusCatalog& catalog, const ModelConfig& model,
                     const TrainingConfig& training) {
  return ctx.spec_hash.empty() ? operation_hash(operation, catalog, model, training)
                               : ctx.spec_hash;
}

void log(const RunContext& ctx, const std::string& line) {
  if (ctx.log) ctx.log(line);
}

// Random-init encoders share one vocabulary over every catalog language, as a
// multilingual encoder would; the baseline sees only its own training data.
std::optional<Vocabulary> vocabulary_for(const CorpusCatalog& catalog,
                                         const Split& train, const ModelConfig& model) {
  if (model.architecture == Architecture::kBiLstm) {
    const Split* splits[] = {&train};
    return build_vocabulary(splits, model.lowercase);
  }
  if (model.encoder_id != kRandomInitEncoder) return std::nullopt;
  std::vector<const Split*> splits;
  for (const auto& [lang, corpus] : catalog) splits.push_back(&corpus.train);
  return build_vocabulary(splits, model.lowercase);
}

Checkpoint train_model(const std::string& setting, const Split& train, const Split* dev,
                       const CorpusCatalog& catalog, const ModelConfig& model,
                       const TrainingConfig& training, const RunContext& ctx) {
  const auto vocab = vocabulary_for(catalog, train, model);
  ClassifierHandle handle =
      build_model(model, vocab ? &*vocab : nullptr, derive_seed(training.seed, "init"));
  log(ctx, "[" + setting + "] training on " + std::to_string(train.size()) + " examples, " +
               std::to_string(handle.parameter_count()) + " parameters");
  auto on_epoch = [&](int epoch, double loss, std::optional<double> dev_f1) {
    char buf[128];
    if (dev_f1) {
      std::snprintf(buf, sizeof buf, "epoch %d/%d loss %.5f dev macro-F1 %.4f", epoch,
                    training.epochs, loss, *dev_f1);
    } else {
      std::snprintf(buf, sizeof buf, "epoch %d/%d loss %.5f", epoch, training.epochs, loss);
    }
    log(ctx, "[" + setting + "] " + buf);
  };
  return fine_tune(std::move(handle), train, dev, training, on_epoch);
}

MetricsReport evaluate(const Checkpoint& ck, const Split& test) {
  const auto predictions = predict_proba(ck, test);
  return macro_f1(gold_labels(test), predictions.labels);
}

// Pieces of a record fixed before training.
struct RunPlan {
  ExperimentKind kind;
  std::string hash;
  std::string setting;
  std::vector<Language> train_languages;
  std::optional<double> fraction;
  std::optional<Language> helper;
  std::vector<Language> tests;
};

std::string checkpoint_stem(const RunPlan& plan, std::uint64_t seed) {
  return record_stem(plan.hash, seed, plan.setting, plan.fraction);
}

RunRecord make_record(const RunPlan& plan, const Language& test, std::uint64_t seed) {
  RunRecord r;
  r.spec_hash = plan.hash;
  r.kind = plan.kind;
  r.setting = plan.setting;
  r.train_languages = plan.train_languages;
  r.test_language = test;
  r.fraction = plan.fraction;
  r.helper = plan.helper;
  r.seed = seed;
  r.checkpoint_ref = fs::path("checkpoints") / checkpoint_stem(plan, seed);
  return r;
}

// Refuse before spending any compute on a run whose outputs already exist.
void check_free(const RunPlan& plan, const TrainingConfig& training, const RunContext& ctx) {
  if (ctx.output_dir.empty() || ctx.force) return;
  for (const auto& test : plan.tests) {
    const fs::path file = run_record_path(make_record(plan, test, training.seed), ctx.output_dir);
    if (fs::exists(file)) throw CollisionError(file);
  }
}

std::vector<RunRecord> execute(const RunPlan& plan, const Split& train, const Split* dev,
                               const CorpusCatalog& catalog, const ModelConfig& model,
                               const TrainingConfig& training, const RunContext& ctx) {
  check_free(plan, training, ctx);
  const auto start = Clock::now();
  const Checkpoint ck = train_model(plan.setting, train, dev, catalog, model, training, ctx);
  std::vector<RunRecord> out;
  for (const auto& test : plan.tests) {
    const Split& test_split = catalog.at(test).test;
    RunRecord r = make_record(plan, test, training.seed);
    r.train_size = train.size();
    r.metrics = evaluate(ck, test_split);
    r.data_hash = ContentHash().update(ck.data_hash).update(training_data_hash(test_split)).hex();
    out.push_back(std::move(r));
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  for (auto& r : out) r.wall_time = seconds;
  if (!ctx.output_dir.empty()) {
    if (ctx.save_checkpoints) save_checkpoint(ck, ctx.output_dir / out.front().checkpoint_ref, ctx.force);
    for (const auto& r : out) {
      persist_run(r, ctx.output_dir, ctx.force);
      log(ctx, "[" + plan.setting + "] " + r.test_language.code() + " macro-F1 " +
                   fixed4(r.metrics.macro_f1));
    }
  }
  return out;
}

// Runs tasks on up to `jobs` threads. Every task runs even if another fails;
// the first failure by index is rethrown after all have finished.
template <typename Task>
std::vector<std::exception_ptr> run_tasks(std::size_t count, int jobs, Task&& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return errors;
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Split concatenated_split(const CorpusCatalog& catalog, std::span<const Language> languages,
                         SplitKind kind, std::uint64_t seed) {
  std::vector<TaggedSplit> parts;
  for (const auto& l : languages) parts.push_back({l, catalog.at(l).split(kind)});
  return concatenate_corpora(parts, seed);
}

void write_text(const fs::path& file, const std::string& text) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
}

std::vector<RunRecord> records_with_hash(const fs::path& dir, const std::string& hash) {
  std::vector<RunRecord> out;
  for (auto& r : load_runs(dir)) {
    if (r.spec_hash == hash) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

RunRecord run_monolingual(const Language& language, const CorpusCatalog& catalog,
                          const ModelConfig& model, const TrainingConfig& training,
                          const RunContext& ctx) {
  const LanguageCorpus& corpus = require_language(catalog, language);
  RunPlan plan{ExperimentKind::kMonolingual,
               hash_for(ctx, "monolingual", catalog, model, training),
               language.code(), {language}, std::nullopt, std::nullopt, {language}};
  return execute(plan, corpus.train, &corpus.dev, catalog, model, training, ctx).front();
}

namespace {

std::vector<RunRecord> joint_records(ExperimentKind kind, const std::string& hash,
                                     const CorpusCatalog& catalog, const ModelConfig& model,
                                     const TrainingConfig& training, const RunContext& ctx) {
  const auto languages = catalog.languages();
  const Split train =
      concatenated_split(catalog, languages, SplitKind::kTrain, derive_seed(training.seed, "joint-train"));
  const Split dev =
      concatenated_split(catalog, languages, SplitKind::kDev, derive_seed(training.seed, "joint-dev"));
  RunPlan plan{kind, hash, "all", languages, std::nullopt, std::nullopt, languages};
  return execute(plan, train, dev.empty() ? nullptr : &dev, catalog, model, training, ctx);
}

}  // namespace

std::vector<RunRecord> run_joint_all(const CorpusCatalog& catalog, const ModelConfig& model,
                                     const TrainingConfig& training, const RunContext& ctx) {
  if (catalog.size() < 2) throw ArgumentError("joint training needs at least two languages");
  return joint_records(ExperimentKind::kJointAll,
                       hash_for(ctx, "joint_all", catalog, model, training), catalog, model,
                       training, ctx);
}

ResultsMatrix run_zero_shot_matrix(const CorpusCatalog& catalog, const ModelConfig& model,
                                   const TrainingConfig& training, const RunContext& ctx,
                                   std::vector<RunRecord>* records_out) {
  if (catalog.size() < 2) throw ArgumentError("the zero-shot matrix needs at least two languages");
  const std::string hash = hash_for(ctx, "zero_shot_matrix", catalog, model, training);
  const auto languages = catalog.languages();
  // One task per training language plus the joint row.
  const std::size_t tasks = languages.size() + 1;
  std::vector<std::vector<RunRecord>> rows(tasks);
  std::vector<std::string> settings;
  for (const auto& l : languages) settings.push_back(l.code());
  settings.push_back("all");

  const auto errors = run_tasks(tasks, ctx.jobs, [&](std::size_t i) {
    if (i == languages.size()) {
      rows[i] = joint_records(ExperimentKind::kZeroShotMatrix, hash, catalog, model, training, ctx);
      return;
    }
    const LanguageCorpus& corpus = catalog.at(languages[i]);
    RunPlan plan{ExperimentKind::kZeroShotMatrix, hash, settings[i], {languages[i]},
                 std::nullopt, std::nullopt, languages};
    rows[i] = execute(plan, corpus.train, &corpus.dev, catalog, model, training, ctx);
  });

  std::vector<RunRecord> all;
  for (const auto& row : rows) all.insert(all.end(), row.begin(), row.end());
  if (records_out) *records_out = all;

  const auto failed = std::find_if(errors.begin(), errors.end(), [](auto& e) { return bool(e); });
  if (failed != errors.end()) {
    if (!ctx.output_dir.empty()) {
      Json manifest = {{"spec_hash", hash}, {"completed", Json::array()}, {"failed", Json::array()}};
      for (const auto& r : all) {
        manifest["completed"].push_back({{"setting", r.setting},
                                         {"test_language", r.test_language.code()},
                                         {"macro_f1", r.metrics.macro_f1},
                                         {"record", run_record_path(r, ctx.output_dir)
                                                        .lexically_relative(ctx.output_dir)
                                                        .generic_string()}});
      }
      for (std::size_t i = 0; i < tasks; ++i) {
        if (!errors[i]) continue;
        std::string message;
        try {
          std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
          message = "unknown failure";
        }
        manifest["failed"].push_back({{"setting", settings[i]}, {"error", message}});
      }
      write_text(ctx.output_dir / "partial_manifest.json", manifest.dump(2) + "\n");
    }
    rethrow_first(errors);
  }

  ResultsMatrix matrix = matrix_from_records(all);
  if (!ctx.output_dir.empty()) {
    const auto same_spec = records_with_hash(ctx.output_dir, hash);
    std::vector<RunRecord> grid;
    for (const auto& r : same_spec) {
      if (r.kind == ExperimentKind::kZeroShotMatrix) grid.push_back(r);
    }
    write_text(ctx.output_dir / "matrix.csv", matrix_from_records(grid).to_csv());
  }
  return matrix;
}

std::vector<RunRecord> run_few_shot_curve(const Language& base,
                                          const std::optional<Language>& helper,
                                          std::span<const double> fractions,
                                          const CorpusCatalog& catalog,
                                          const ModelConfig& model,
                                          const TrainingConfig& training,
                                          const RunContext& ctx) {
  const LanguageCorpus& corpus = require_language(catalog, base);
  if (helper) {
    if (*helper == base) throw ArgumentError("the helper language must differ from the base");
    require_language(catalog, *helper);
  }
  if (fractions.empty()) throw ArgumentError("no fractions given");
  double previous = 0.0;
  for (double f : fractions) {
    if (!(f > previous && f <= 1.0)) {
      throw ArgumentError("fractions must be strictly increasing in (0, 1]");
    }
    previous = f;
  }
  const std::string hash = hash_for(ctx, "few_shot_curve", catalog, model, training);
  const std::string setting = helper ? base.code() + "+" + helper->code() : base.code();
  std::vector<Language> train_languages{base};
  if (helper) train_languages.push_back(*helper);
  std::sort(train_languages.begin(), train_languages.end());

  std::vector<RunRecord> out(fractions.size());
  const auto errors = run_tasks(fractions.size(), ctx.jobs, [&](std::size_t i) {
    const double f = fractions[i];
    Split train = slice_fraction(corpus.train, f, derive_seed(training.seed, "slice:" + base.code()));
    if (helper) {
      const TaggedSplit parts[] = {{base, train}, {*helper, catalog.at(*helper).train}};
      train = concatenate_corpora(parts, derive_seed(training.seed, "augment"));
    }
    RunPlan plan{ExperimentKind::kFewShotCurve, hash, setting, train_languages, f, helper, {base}};
    out[i] = execute(plan, train, &corpus.dev, catalog, model, training, ctx).front();
  });
  rethrow_first(errors);
  if (!ctx.output_dir.empty()) {
    write_text(ctx.output_dir / "fewshot.csv", fewshot_csv(records_with_hash(ctx.output_dir, hash)));
  }
  return out;
}

RunRecord run_augmentation(const Language& base, const Language& helper,
                           const CorpusCatalog& catalog, const ModelConfig& model,
                           const TrainingConfig& training, const RunContext& ctx) {
  if (base == helper) throw ArgumentError("the helper language must differ from the base");
  const LanguageCorpus& corpus = require_language(catalog, base);
  const LanguageCorpus& extra = require_language(catalog, helper);
  const TaggedSplit parts[] = {{base, corpus.train}, {helper, extra.train}};
  const Split train = concatenate_corpora(parts, derive_seed(training.seed, "augment"));
  std::vector<Language> train_languages{base, helper};
  std::sort(train_languages.begin(), train_languages.end());
  RunPlan plan{ExperimentKind::kAugmentation,
               hash_for(ctx, "augmentation", catalog, model, training),
               base.code() + "+" + helper.code(), train_languages, std::nullopt, helper, {base}};
  return execute(plan, train, &corpus.dev, catalog, model, training, ctx).front();
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const CorpusCatalog& catalog,
                                      const RunContext& context) {
  spec.validate();
  RunContext ctx = context;
  if (ctx.spec_hash.empty()) ctx.spec_hash = spec_hash(spec);
  switch (spec.kind) {
    case ExperimentKind::kMonolingual: {
      std::vector<RunRecord> out(spec.train_languages.size());
      const auto errors = run_tasks(out.size(), ctx.jobs, [&](std::size_t i) {
        out[i] = run_monolingual(spec.train_languages[i], catalog, spec.model, spec.training, ctx);
      });
      rethrow_first(errors);
      return out;
    }
    case ExperimentKind::kJointAll:
      return run_joint_all(catalog, spec.model, spec.training, ctx);
    case ExperimentKind::kZeroShotMatrix: {
      std::vector<RunRecord> out;
      run_zero_shot_matrix(catalog, spec.model, spec.training, ctx, &out);
      return out;
    }
    case ExperimentKind::kFewShotCurve:
      return run_few_shot_curve(*spec.augment_base, spec.augment_with, *spec.fractions, catalog,
                                spec.model, spec.training, ctx);
    case ExperimentKind::kAugmentation:
      return {run_augmentation(*spec.augment_base, *spec.augment_with, catalog, spec.model,
                               spec.training, ctx)};
  }
  throw ArgumentError("unknown experiment kind");
}

}  // namespace xoff
