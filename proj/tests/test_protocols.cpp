#include <gtest/gtest.h>

#include <json.hpp>

#include "support.hpp"
#include "xoff/error.hpp"
#include "xoff/experiment_config.hpp"
#include "xoff/protocols.hpp"

using namespace xoff;
using testing_support::TempDir;

namespace {

const Language A = Language::synthetic("a");
const Language B = Language::synthetic("b");

TrainingConfig quick(int epochs = 20) {
  TrainingConfig t = TrainingConfig::desk();
  t.epochs = epochs;
  return t;
}

RunRecord sample_record(const std::string& setting, const Language& test, double f1) {
  RunRecord r;
  r.spec_hash = "0123456789abcdef";
  r.kind = ExperimentKind::kZeroShotMatrix;
  r.setting = setting;
  r.train_languages = {A};
  r.test_language = test;
  r.train_size = 12;
  r.metrics.macro_f1 = f1;
  r.metrics.confusion = {1, 2, 3, 4};
  r.metrics.n = 10;
  r.seed = 42;
  r.data_hash = "feed";
  r.wall_time = 1.5;
  return r;
}

}  // namespace

TEST(Persist, WriteRefuseReadBack) {
  TempDir dir;
  RunRecord r = sample_record("syn_a", B, 0.4321);
  r.fraction = 0.25;
  r.helper = B;
  r.checkpoint_ref = "checkpoints/x";
  const auto file = persist_run(r, dir.path());
  EXPECT_TRUE(std::filesystem::exists(file));
  EXPECT_EQ(file, run_record_path(r, dir.path()));
  EXPECT_THROW(persist_run(r, dir.path()), CollisionError);
  RunRecord changed = r;
  changed.metrics.macro_f1 = 0.9;
  EXPECT_NO_THROW(persist_run(changed, dir.path(), true));
  const RunRecord back = read_run(file);
  EXPECT_EQ(back, changed);
  EXPECT_EQ(back.wall_time, changed.wall_time);
}

TEST(Persist, LoadRunsNeedsRecords) {
  TempDir dir;
  EXPECT_THROW(load_runs(dir.path()), NoRecordsError);
  persist_run(sample_record("syn_a", A, 0.9), dir.path());
  persist_run(sample_record("syn_b", A, 0.5), dir.path());
  EXPECT_EQ(load_runs(dir.path()).size(), 2u);
}

TEST(Persist, CorruptRecordIsReported) {
  TempDir dir;
  testing_support::write_file(dir / "runs" / "bad.json", "{\"spec_hash\": 3}");
  EXPECT_THROW(read_run(dir / "runs" / "bad.json"), ConfigError);
}

TEST(Matrix, FiveLanguageGridShape) {
  std::vector<RunRecord> records;
  const auto& langs = Language::shared_task_languages();
  for (const auto& train : langs) {
    for (const auto& test : langs) records.push_back(sample_record(train.code(), test, 0.5));
  }
  for (const auto& test : langs) records.push_back(sample_record("all", test, 0.8));
  const ResultsMatrix m = matrix_from_records(records);
  EXPECT_EQ(m.rows, (std::vector<std::string>{"en", "da", "el", "ar", "tr", "all"}));
  EXPECT_EQ(m.columns, langs);
  EXPECT_TRUE(m.complete());
  EXPECT_EQ(*m.cell("all", Language::turkish()), 0.8);
  records.pop_back();
  EXPECT_FALSE(matrix_from_records(records).complete());
}

TEST(Matrix, RepeatedSeedsAveragedInCsv) {
  std::vector<RunRecord> records = {sample_record("syn_a", A, 0.5), sample_record("syn_a", A, 0.7)};
  records[1].seed = 43;
  EXPECT_EQ(matrix_from_records(records).to_csv(), "setting,syn_a\nsyn_a,0.6000\n");
}

TEST(SpecHash, SeedAndOutputExcludedFieldsIncluded) {
  ExperimentSpec s;
  s.kind = ExperimentKind::kZeroShotMatrix;
  s.train_languages = s.test_languages = {A, B};
  s.model = ModelConfig::desk();
  s.training = quick();
  s.data.format = DataSource::Format::kSynthetic;
  const std::string h = spec_hash(s);
  ExperimentSpec t = s;
  t.training.seed = 7;
  t.output_dir = "elsewhere";
  EXPECT_EQ(spec_hash(t), h);
  t.training.epochs = 3;
  EXPECT_NE(spec_hash(t), h);
  t = s;
  t.data.synthetic.seed = 9;
  EXPECT_NE(spec_hash(t), h);
}

TEST(SpecHash, KeyOrderIrrelevant) {
  const char* one = R"({"kind": "monolingual", "train_languages": ["en"],
                        "training": {"epochs": 2, "batch_size": 8}})";
  const char* two = R"({"training": {"batch_size": 8, "epochs": 2},
                        "train_languages": ["en"], "kind": "monolingual"})";
  EXPECT_EQ(spec_hash(parse_experiment_text(one)), spec_hash(parse_experiment_text(two)));
}

TEST(Runs, IdenticalInputsGiveIdenticalRecords) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(48, 16, 32));
  RunContext ctx;
  ctx.spec_hash = "fixed";
  const RunRecord a = run_monolingual(A, c, ModelConfig::desk(), quick(5), ctx);
  const RunRecord b = run_monolingual(A, c, ModelConfig::desk(), quick(5), ctx);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.spec_hash, "fixed");
  EXPECT_EQ(a.train_size, 48u);
  EXPECT_FALSE(a.data_hash.empty());
  TrainingConfig other = quick(5);
  other.seed = 43;
  EXPECT_NE(run_monolingual(A, c, ModelConfig::desk(), other, ctx).seed, a.seed);
}

TEST(Runs, CollisionDetectedBeforeTraining) {
  TempDir dir;
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(16, 8, 16));
  RunContext ctx;
  ctx.output_dir = dir.path();
  ctx.save_checkpoints = false;
  const RunRecord first = run_monolingual(A, c, ModelConfig::desk(), quick(2), ctx);
  EXPECT_TRUE(std::filesystem::exists(run_record_path(first, dir.path())));
  EXPECT_THROW(run_monolingual(A, c, ModelConfig::desk(), quick(2), ctx), CollisionError);
  ctx.force = true;
  EXPECT_EQ(run_monolingual(A, c, ModelConfig::desk(), quick(2), ctx), first);
}

TEST(Runs, CheckpointsSavedUnderOutput) {
  TempDir dir;
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(16, 8, 16));
  RunContext ctx;
  ctx.output_dir = dir.path();
  const RunRecord r = run_monolingual(A, c, ModelConfig::desk(), quick(1), ctx);
  ASSERT_FALSE(r.checkpoint_ref.empty());
  EXPECT_TRUE(std::filesystem::exists(dir.path() / r.checkpoint_ref / "checkpoint.json"));
  EXPECT_NO_THROW(load_checkpoint(dir.path() / r.checkpoint_ref));
}

TEST(Runs, JointGivesOneRecordPerLanguage) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(16, 8, 16));
  const auto records = run_joint_all(c, ModelConfig::desk(), quick(2));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].test_language, A);
  EXPECT_EQ(records[1].test_language, B);
  EXPECT_EQ(records[0].setting, "all");
  EXPECT_EQ(records[0].train_size, 32u);
  CorpusCatalog single;
  single.add(c.at(A));
  EXPECT_THROW(run_joint_all(single, ModelConfig::desk(), quick(1)), ArgumentError);
}

TEST(Runs, ZeroShotMatrixStructure) {
  TempDir dir;
  const CorpusCatalog c = testing_support::disjoint_pair();
  RunContext ctx;
  ctx.output_dir = dir.path();
  ctx.save_checkpoints = false;
  const ResultsMatrix m = run_zero_shot_matrix(c, ModelConfig::desk(), quick(), ctx);
  ASSERT_TRUE(m.complete());
  EXPECT_EQ(m.rows, (std::vector<std::string>{"syn_a", "syn_b", "all"}));
  EXPECT_GE(*m.cell("syn_a", A), 0.9);
  EXPECT_GE(*m.cell("syn_b", B), 0.9);
  for (auto [row, col] : {std::pair{"syn_a", B}, {"syn_b", A}}) {
    EXPECT_GE(*m.cell(row, col), 0.25);
    EXPECT_LE(*m.cell(row, col), 0.6);
  }
  EXPECT_NEAR(*m.cell("all", A), *m.cell("syn_a", A), 0.05);
  EXPECT_NEAR(*m.cell("all", B), *m.cell("syn_b", B), 0.05);
  EXPECT_EQ(testing_support::read_file(dir / "matrix.csv"), m.to_csv());
}

TEST(Runs, MatrixIndependentOfJobs) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(24, 8, 24));
  RunContext serial, parallel;
  parallel.jobs = 3;
  std::vector<RunRecord> a, b;
  run_zero_shot_matrix(c, ModelConfig::desk(), quick(3), serial, &a);
  run_zero_shot_matrix(c, ModelConfig::desk(), quick(3), parallel, &b);
  EXPECT_EQ(a, b);
}

TEST(Runs, FailedCellLeavesPartialManifest) {
  TempDir dir;
  CorpusCatalog c;
  c.add(make_synthetic_corpus(A, testing_support::desk_sizes(16, 8, 16)));
  LanguageCorpus broken = make_synthetic_corpus(B, testing_support::desk_sizes(16, 8, 16));
  broken.train.clear();
  c.add(broken);
  RunContext ctx;
  ctx.output_dir = dir.path();
  ctx.save_checkpoints = false;
  EXPECT_THROW(run_zero_shot_matrix(c, ModelConfig::desk(), quick(1), ctx), ArgumentError);
  const auto manifest = nlohmann::json::parse(testing_support::read_file(dir / "partial_manifest.json"));
  ASSERT_EQ(manifest["failed"].size(), 1u);
  EXPECT_EQ(manifest["failed"][0]["setting"], "syn_b");
  EXPECT_EQ(manifest["completed"].size(), 4u);  // syn_a row and the joint row
  EXPECT_FALSE(std::filesystem::exists(dir / "matrix.csv"));
}

TEST(Runs, FewShotDefaultGrid) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(40, 8, 16));
  const auto grid = default_fraction_grid();
  ASSERT_EQ(grid.size(), 20u);
  EXPECT_EQ(grid.back(), 1.0);
  const TrainingConfig t = quick(2);
  const auto records = run_few_shot_curve(A, std::nullopt, grid, c, ModelConfig::desk(), t);
  ASSERT_EQ(records.size(), 20u);
  for (std::size_t i = 1; i < records.size(); ++i) {
    EXPECT_GT(records[i].train_size, records[i - 1].train_size);
  }
  EXPECT_EQ(records.back().train_size, 40u);
  const RunRecord mono = run_monolingual(A, c, ModelConfig::desk(), t);
  EXPECT_EQ(records.back().metrics, mono.metrics);
}

TEST(Runs, FewShotWithHelperAndBadFractions) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(20, 8, 16));
  const double fractions[] = {0.5, 1.0};
  const auto records = run_few_shot_curve(A, B, fractions, c, ModelConfig::desk(), quick(1));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].setting, "syn_a+syn_b");
  EXPECT_EQ(records[0].train_size, 30u);
  EXPECT_EQ(records[0].helper, B);
  EXPECT_EQ(records[0].test_language, A);
  const double unordered[] = {0.5, 0.5};
  EXPECT_THROW(run_few_shot_curve(A, B, unordered, c, ModelConfig::desk(), quick(1)),
               ArgumentError);
  EXPECT_THROW(run_few_shot_curve(A, A, fractions, c, ModelConfig::desk(), quick(1)),
               ArgumentError);
}

TEST(Runs, AugmentationWithSharedLexiconDoesNotHurt) {
  auto o = testing_support::desk_sizes(64, 16, 128);
  CorpusCatalog c;
  c.add(make_synthetic_corpus(A, o));
  o.lexicon_from = A;
  const Language C = Language::synthetic("c");
  c.add(make_synthetic_corpus(C, o));
  const RunRecord base = run_monolingual(A, c, ModelConfig::desk(), quick());
  const RunRecord aug = run_augmentation(A, C, c, ModelConfig::desk(), quick());
  EXPECT_EQ(aug.setting, "syn_a+syn_c");
  EXPECT_EQ(aug.train_size, 128u);
  EXPECT_GE(aug.metrics.macro_f1, base.metrics.macro_f1 - 0.05);
}

TEST(Runs, UnknownLanguageRejected) {
  const CorpusCatalog c = testing_support::disjoint_pair(testing_support::desk_sizes(16, 8, 16));
  EXPECT_THROW(run_monolingual(Language::english(), c, ModelConfig::desk(), quick(1)),
               ArgumentError);
}
