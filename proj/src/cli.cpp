#include "xoff/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

#include "xoff/attribution.hpp"
#include "xoff/error.hpp"
#include "xoff/experiment_config.hpp"
#include "xoff/protocols.hpp"
#include "xoff/report.hpp"

namespace xoff {

namespace fs = std::filesystem;

namespace {

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kIngest: return "ingest";
    case Command::kTrain: return "train";
    case Command::kEvaluate: return "evaluate";
    case Command::kMatrix: return "matrix";
    case Command::kFewshot: return "fewshot";
    case Command::kAugment: return "augment";
    case Command::kAttribute: return "attribute";
    case Command::kReport: return "report";
  }
  return "?";
}

void add_experiment_options(CLI::App* sub, CliInvocation& inv) {
  sub->add_option("--config", inv.config_path, "Experiment spec (JSON)")->required();
  sub->add_option("--seed", inv.seed, "Training seed, overriding the spec");
  sub->add_option("--jobs", inv.jobs, "Independent runs executed concurrently")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--force", inv.force, "Overwrite existing run records");
  sub->add_option("--set", inv.overrides, "Override a spec field: dotted.key=value");
  sub->add_option("--repeat", inv.repeat, "Run this many consecutive seeds")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", inv.quiet, "No progress lines");
}

}  // namespace

std::optional<CliInvocation> parse_command_line(int argc, const char* const* argv,
                                                std::ostream& out) {
  CliInvocation inv;
  CLI::App app{"Cross-lingual offensive language detection experiments", "xoff"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "Load and validate OLID-format corpora");
  ingest->add_option("--data-dir", inv.data_dir, "Directory with train/dev/test TSV files")
      ->required();
  ingest->add_option("--language", inv.languages, "Language code (repeatable)")->required();

  auto* train = app.add_subcommand("train", "Monolingual or joint training");
  add_experiment_options(train, inv);
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the spec's test sets");
  evaluate->add_option("--config", inv.config_path, "Experiment spec (JSON)")->required();
  evaluate->add_option("--checkpoint", inv.checkpoint, "Checkpoint directory")->required();
  evaluate->add_option("--set", inv.overrides, "Override a spec field: dotted.key=value");
  evaluate->add_flag("--force", inv.force, "Overwrite an existing evaluation");
  auto* matrix = app.add_subcommand("matrix", "Zero-shot train/test language matrix");
  add_experiment_options(matrix, inv);
  auto* fewshot = app.add_subcommand("fewshot", "Few-shot learning curve");
  add_experiment_options(fewshot, inv);
  auto* augment = app.add_subcommand("augment", "Base language plus a helper language");
  add_experiment_options(augment, inv);

  auto* attribute = app.add_subcommand("attribute", "Integrated Gradients token attributions");
  attribute->add_option("--checkpoint", inv.checkpoint, "Checkpoint directory")->required();
  auto* input = attribute->add_option("--input", inv.input, "Text to explain");
  auto* fps = attribute->add_option("--false-positives", inv.false_positives,
                                    "Explain the N most confident false positives");
  input->excludes(fps);
  attribute->add_option("--config", inv.config_path, "Spec whose data holds the examples");
  attribute->add_option("--set", inv.overrides, "Override a spec field: dotted.key=value");
  attribute->add_option("--language", inv.languages, "Test language for --false-positives");
  attribute->add_option("--format", inv.format, "html or terminal")
      ->check(CLI::IsMember({"html", "terminal"}))
      ->default_val("terminal");
  attribute->add_option("--steps", inv.steps, "Integration steps")->check(CLI::Range(2, 1 << 20));
  attribute->add_flag("--no-color", inv.no_color, "Plain terminal output");
  attribute->add_option("--output", inv.output, "Write the document here");

  auto* report = app.add_subcommand("report", "Tables and plots from persisted runs");
  report->add_option("--results-dir", inv.results_dir, "Results directory")->required();
  report->add_option("--format", inv.format, "csv, markdown, png or html")
      ->required()
      ->check(CLI::IsMember({"csv", "markdown", "markdown_table", "md", "png", "png_plot", "html"}));

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    throw UsageError("unknown command '" + std::string(argv[1]) + "'");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const std::pair<CLI::App*, Command> table[] = {
      {ingest, Command::kIngest},   {train, Command::kTrain},         {evaluate, Command::kEvaluate},
      {matrix, Command::kMatrix},   {fewshot, Command::kFewshot},     {augment, Command::kAugment},
      {attribute, Command::kAttribute}, {report, Command::kReport}};
  for (const auto& [sub, command] : table) {
    if (sub->parsed()) inv.command = command;
  }
  if (inv.command == Command::kAttribute) {
    if (!inv.input && !inv.false_positives) {
      throw UsageError("attribute needs --input or --false-positives");
    }
    if (inv.false_positives && inv.config_path.empty()) {
      throw UsageError("--false-positives needs --config to locate the data");
    }
  }
  return inv;
}

namespace {

bool command_runs(Command c, ExperimentKind kind) {
  switch (c) {
    case Command::kTrain:
      return kind == ExperimentKind::kMonolingual || kind == ExperimentKind::kJointAll;
    case Command::kMatrix: return kind == ExperimentKind::kZeroShotMatrix;
    case Command::kFewshot: return kind == ExperimentKind::kFewShotCurve;
    case Command::kAugment: return kind == ExperimentKind::kAugmentation;
    default: return false;
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string describe(const RunRecord& r) {
  std::string s = r.setting + " -> " + r.test_language.code();
  if (r.fraction) s += " (fraction " + fixed(*r.fraction, 2) + ")";
  s += ": macro-F1 " + fixed(r.metrics.macro_f1) + "  F1(OFF) " + fixed(r.metrics.f1_offensive) +
       "  F1(NOT) " + fixed(r.metrics.f1_not_offensive) + "  n=" + std::to_string(r.metrics.n);
  return s;
}

void run_experiment_command(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = parse_experiment_config(inv.config_path, inv.overrides);
  if (!command_runs(inv.command, spec.kind)) {
    throw UsageError("command '" + std::string(command_name(inv.command)) +
                     "' cannot run a spec of kind " + std::string(experiment_kind_name(spec.kind)));
  }
  if (inv.seed) spec.training.seed = *inv.seed;
  const CorpusCatalog catalog = load_catalog(spec);

  std::mutex log_mutex;
  RunContext ctx;
  ctx.output_dir = spec.output_dir;
  ctx.spec_hash = spec_hash(spec);
  ctx.force = inv.force;
  ctx.jobs = inv.jobs;
  if (!inv.quiet) {
    ctx.log = [&](const std::string& line) {
      std::lock_guard lock(log_mutex);
      err << line << "\n";
    };
  }

  std::vector<RunRecord> all;
  for (int k = 0; k < inv.repeat; ++k) {
    ExperimentSpec seeded = spec;
    seeded.training.seed = spec.training.seed + static_cast<std::uint64_t>(k);
    auto records = run_experiment(seeded, catalog, ctx);
    for (const auto& r : records) out << "seed " << r.seed << "  " << describe(r) << "\n";
    all.insert(all.end(), records.begin(), records.end());
  }
  if (inv.repeat > 1) {
    std::map<std::tuple<std::string, std::string, double>, std::vector<double>> cells;
    for (const auto& r : all) {
      cells[{r.setting, r.test_language.code(), r.fraction.value_or(-1.0)}].push_back(r.metrics.macro_f1);
    }
    out << "across " << inv.repeat << " seeds:\n";
    for (const auto& [key, values] : cells) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double spread = std::sqrt(sq / static_cast<double>(values.size() - 1));
      out << "  " << std::get<0>(key) << " -> " << std::get<1>(key);
      if (std::get<2>(key) >= 0.0) out << " (fraction " << fixed(std::get<2>(key), 2) << ")";
      out << ": " << fixed(mean) << " ± " << fixed(spread) << "\n";
    }
  }
  out << "results in " << spec.output_dir.string() << "\n";
}

void run_ingest(const CliInvocation& inv, std::ostream& out) {
  CorpusCatalog catalog;
  for (const auto& code : inv.languages) {
    const Language lang = [&] {
      try {
        return Language::parse(code);
      } catch (const Error& e) {
        throw ArgumentError(e.what());
      }
    }();
    fs::path dir = inv.data_dir / lang.code();
    if (!fs::is_directory(dir)) {
      if (inv.languages.size() > 1) {
        throw IngestionError("no directory " + dir.string() + " for language " + lang.code());
      }
      dir = inv.data_dir;
    }
    LanguageCorpus corpus = load_corpus(dir, lang);
    try {
      validate_corpus(corpus);
    } catch (const ArgumentError& e) {
      throw IngestionError(lang.code() + ": " + e.what());
    }
    catalog.add(std::move(corpus));
  }
  out << format_corpus_summary(corpus_summary(catalog));
}

void run_evaluate(const CliInvocation& inv, std::ostream& out) {
  const ExperimentSpec spec = parse_experiment_config(inv.config_path, inv.overrides);
  const Checkpoint ck = load_checkpoint(inv.checkpoint);
  const CorpusCatalog catalog = load_catalog(spec);
  const fs::path file =
      spec.output_dir / "evaluations" / (inv.checkpoint.filename().string() + ".json");
  if (fs::exists(file) && !inv.force) throw CollisionError(file);
  Json results = Json::array();
  for (const auto& lang : spec.test_languages) {
    const Split& test = catalog.at(lang).test;
    const auto predictions = predict_proba(ck, test);
    const MetricsReport m = macro_f1(gold_labels(test), predictions.labels);
    out << lang.code() << ": macro-F1 " << fixed(m.macro_f1) << "  F1(OFF) " << fixed(m.f1_offensive)
        << "  F1(NOT) " << fixed(m.f1_not_offensive) << "\n"
        << "  gold NOT: " << m.confusion.tn << " predicted NOT, " << m.confusion.fp
        << " predicted OFF\n"
        << "  gold OFF: " << m.confusion.fn << " predicted NOT, " << m.confusion.tp
        << " predicted OFF\n";
    results.push_back({{"test_language", lang.code()}, {"metrics", to_json(m)}});
  }
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + file.string());
  f << Json{{"checkpoint", inv.checkpoint.generic_string()}, {"results", results}}.dump(2) << "\n";
}

void write_or_print(const std::string& text, const std::optional<fs::path>& file, std::ostream& out) {
  if (!file) {
    out << text;
    return;
  }
  std::ofstream f(*file, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + file->string());
  f << text;
  out << "wrote " << file->string() << "\n";
}

void run_attribute(const CliInvocation& inv, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(inv.checkpoint);
  AttributionConfig config;
  config.num_steps = inv.steps;
  const RenderFormat format = inv.format == "html" ? RenderFormat::kHtml : RenderFormat::kTerminal;
  RenderOptions options;
  options.color = !inv.no_color;

  std::vector<AttributionResult> results;
  std::optional<fs::path> output = inv.output;
  if (inv.input) {
    LabeledExample ex;
    ex.id = "input";
    ex.text = *inv.input;
    AttributionResult r = integrated_gradients(ck, ex, config);
    r.gold.reset();
    results.push_back(std::move(r));
  } else {
    const ExperimentSpec spec = parse_experiment_config(inv.config_path, inv.overrides);
    Language lang = ck.training_languages.empty() ? spec.test_languages.front()
                                                  : ck.training_languages.front();
    if (!inv.languages.empty()) lang = Language::parse(inv.languages.front());
    ExperimentSpec data_spec = spec;
    data_spec.train_languages = {lang};
    data_spec.test_languages = {lang};
    const CorpusCatalog catalog = load_catalog(data_spec);
    const auto fps = collect_false_positives(ck, catalog.at(lang).test, *inv.false_positives);
    out << fps.size() << " false positives on " << lang.code() << " test\n";
    for (const auto& fp : fps) results.push_back(integrated_gradients(ck, fp.example, config));
    if (!output && format == RenderFormat::kHtml) {
      fs::create_directories(spec.output_dir / "attribution");
      output = spec.output_dir / "attribution" / ("false_positives-" + lang.code() + ".html");
    }
    options.title = "False positives on " + lang.display_name();
  }
  if (format == RenderFormat::kHtml) {
    write_or_print(render_html_report(results, options), output, out);
  } else {
    std::string text;
    for (const auto& r : results) text += render_importance(r, RenderFormat::kTerminal, options);
    write_or_print(text, output, out);
  }
}

void run_report(const CliInvocation& inv, std::ostream& out) {
  const auto format = parse_report_format(inv.format);
  if (!format) throw UsageError("unknown report format " + inv.format);
  for (const auto& file : emit_report(inv.results_dir, *format)) out << "wrote " << file.string() << "\n";
}

}  // namespace

void dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  switch (inv.command) {
    case Command::kIngest: run_ingest(inv, out); return;
    case Command::kTrain:
    case Command::kMatrix:
    case Command::kFewshot:
    case Command::kAugment: run_experiment_command(inv, out, err); return;
    case Command::kEvaluate: run_evaluate(inv, out); return;
    case Command::kAttribute: run_attribute(inv, out); return;
    case Command::kReport: run_report(inv, out); return;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto fail = [&](ErrorCategory category, const std::string& message) {
    std::string line = message;
    for (auto& c : line) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    err << "error: " << category_name(category) << ": " << line << "\n";
    return exit_code(category);
  };
  try {
    const auto invocation = parse_command_line(argc, argv, out);
    if (!invocation) return 0;
    dispatch(*invocation, out, err);
    return 0;
  } catch (const Error& e) {
    return fail(e.category(), e.what());
  } catch (const Json::exception& e) {
    return fail(ErrorCategory::kConfig, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(ErrorCategory::kIo, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCategory::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCategory::kInternal, e.what());
  }
}

}  // namespace xoff
