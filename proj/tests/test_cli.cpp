#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "xoff/cli.hpp"
#include "xoff/error.hpp"
#include "xoff/protocols.hpp"

using namespace xoff;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

namespace fs = std::filesystem;

const fs::path kDesk = fs::path(XOFF_SOURCE_DIR) / "configs" / "desk";

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "xoff");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

// Small corpora and few epochs so desk experiments finish quickly.
std::vector<std::string> quick(const std::string& command, const std::string& config,
                               const TempDir& dir) {
  return {command,
          "--config",
          (kDesk / config).string(),
          "--quiet",
          "--set",
          "output_dir=" + dir.path().string(),
          "--set",
          "data.synthetic={\"train_size\": 40, \"dev_size\": 8, \"test_size\": 32}",
          "--set",
          "training.epochs=2"};
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path first_checkpoint(const fs::path& dir) {
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().filename() == "checkpoint.json") return e.path().parent_path();
  }
  return {};
}

void write_olid(const fs::path& dir) {
  const std::string header = "id\ttweet\tsubtask_a\n";
  write_file(dir / "train.tsv", header + "1\tyou are awful\tOFF\n2\tnice day\tNOT\n");
  write_file(dir / "dev.tsv", header + "3\tawful people\tOFF\n4\tgood food\tNOT\n");
  write_file(dir / "test.tsv", header + "5\tsuch awful\tOFF\n6\tlovely\tNOT\n");
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}).code, 0);
  const Outcome none = cli({});
  EXPECT_EQ(none.code, 2);
  const Outcome unknown = cli({"frobnicate"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_EQ(unknown.err.rfind("error: usage: ", 0), 0u) << unknown.err;
  EXPECT_EQ(count_lines(unknown.err), 1u);
  EXPECT_EQ(cli({"train"}).code, 2);
  EXPECT_EQ(cli({"train", "--config", "x.json", "--jobs", "0"}).code, 2);
  EXPECT_EQ(cli({"attribute", "--checkpoint", "ck"}).code, 2);
  EXPECT_EQ(cli({"attribute", "--checkpoint", "ck", "--input", "hi", "--steps", "1"}).code, 2);
}

TEST(Cli, ConfigErrors) {
  TempDir dir;
  EXPECT_EQ(cli({"train", "--config", (dir / "missing.json").string()}).code, 3);
  const Outcome bad = cli({"train", "--config", (kDesk / "monolingual.json").string(), "--set",
                           "training.epochs=zero"});
  EXPECT_EQ(bad.code, 3);
  EXPECT_NE(bad.err.find("training.epochs"), std::string::npos) << bad.err;
  // A matrix spec handed to the wrong command.
  EXPECT_EQ(cli({"train", "--config", (kDesk / "matrix.json").string()}).code, 2);
}

TEST(Cli, Ingest) {
  TempDir dir;
  write_olid(dir / "en");
  const Outcome ok = cli({"ingest", "--data-dir", dir.path().string(), "--language", "en"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_FALSE(ok.out.empty());
  EXPECT_EQ(cli({"ingest", "--data-dir", (dir / "nowhere").string(), "--language", "en"}).code, 4);
  EXPECT_EQ(cli({"ingest", "--data-dir", dir.path().string(), "--language", "en", "--language",
                 "da"})
                .code,
            4);
  EXPECT_EQ(cli({"ingest", "--data-dir", dir.path().string(), "--language", "xx"}).code, 5);
  write_file(dir / "en" / "dev.tsv", "id\ttweet\tsubtask_a\n3\tmeh\tMAYBE\n");
  const Outcome bad = cli({"ingest", "--data-dir", dir.path().string(), "--language", "en"});
  EXPECT_EQ(bad.code, 4);
  EXPECT_NE(bad.err.find("MAYBE"), std::string::npos) << bad.err;
}

TEST(Cli, UnreadableDataIsIngestionError) {
  TempDir dir;
  write_file(dir / "spec.json",
             R"({"kind": "monolingual", "train_languages": ["en"],
                 "data": {"root": ")" + (dir / "absent").generic_string() + R"("}})");
  const Outcome o = cli({"train", "--config", (dir / "spec.json").string()});
  EXPECT_EQ(o.code, 4);
  EXPECT_EQ(o.err.rfind("error: ingestion: ", 0), 0u) << o.err;
}

TEST(Cli, MatrixWritesCsvAndRefusesOverwrite) {
  TempDir dir;
  const Outcome o = cli(quick("matrix", "matrix.json", dir));
  ASSERT_EQ(o.code, 0) << o.err;
  const std::string csv = testing_support::read_file(dir / "matrix.csv");
  EXPECT_EQ(count_lines(csv), 4u) << csv;
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "setting,syn_a,syn_b");
  EXPECT_EQ(load_runs(dir.path()).size(), 6u);

  const Outcome again = cli(quick("matrix", "matrix.json", dir));
  EXPECT_EQ(again.code, 9);
  auto forced = quick("matrix", "matrix.json", dir);
  forced.push_back("--force");
  EXPECT_EQ(cli(forced).code, 0);
  EXPECT_EQ(testing_support::read_file(dir / "matrix.csv"), csv);

  const Outcome report = cli({"report", "--results-dir", dir.path().string(), "--format", "csv"});
  EXPECT_EQ(report.code, 0) << report.err;
  EXPECT_TRUE(fs::exists(dir / "report" / "matrix.csv"));
}

TEST(Cli, FewshotWritesTwentyRecords) {
  TempDir dir;
  const Outcome o = cli(quick("fewshot", "fewshot.json", dir));
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(load_runs(dir.path()).size(), 20u);
  EXPECT_EQ(count_lines(testing_support::read_file(dir / "fewshot.csv")), 21u);
}

TEST(Cli, RepeatRunsConsecutiveSeeds) {
  TempDir dir;
  auto args = quick("train", "monolingual.json", dir);
  args.insert(args.end(), {"--repeat", "2", "--seed", "7"});
  const Outcome o = cli(args);
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("seed 7 "), std::string::npos);
  EXPECT_NE(o.out.find("seed 8 "), std::string::npos);
  EXPECT_NE(o.out.find("across 2 seeds"), std::string::npos);
}

TEST(Cli, EvaluateAndAttributeCheckpoint) {
  TempDir dir;
  ASSERT_EQ(cli(quick("train", "monolingual.json", dir)).code, 0);
  const fs::path ck = first_checkpoint(dir.path());
  ASSERT_FALSE(ck.empty());

  const std::vector<std::string> eval = {"evaluate",     "--config",
                                         (kDesk / "monolingual.json").string(),
                                         "--checkpoint", ck.string(),
                                         "--set",        "output_dir=" + dir.path().string(),
                                         "--set",
                                         "data.synthetic={\"train_size\": 40, \"dev_size\": 8, "
                                         "\"test_size\": 32}"};
  const Outcome e = cli(eval);
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("syn_a: macro-F1 "), std::string::npos) << e.out;
  EXPECT_EQ(cli(eval).code, 9);

  const Outcome a = cli({"attribute", "--checkpoint", ck.string(), "--input",
                         synthetic_lexicon_word(Language::synthetic("a"), 0) + " filler",
                         "--no-color", "--steps", "8"});
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("prediction "), std::string::npos) << a.out;

  const fs::path html = dir / "fp.html";
  const Outcome f = cli({"attribute", "--checkpoint", ck.string(), "--false-positives", "3",
                         "--config", (kDesk / "monolingual.json").string(), "--set",
                         "output_dir=" + dir.path().string(), "--format", "html", "--output",
                         html.string()});
  EXPECT_EQ(f.code, 0) << f.err;
  EXPECT_TRUE(fs::exists(html));

  EXPECT_EQ(cli({"attribute", "--checkpoint", (dir / "nothing").string(), "--input", "x"}).code,
            8);
}

TEST(Cli, ReportWithoutRecords) {
  TempDir dir;
  const Outcome o = cli({"report", "--results-dir", dir.path().string(), "--format", "markdown"});
  EXPECT_EQ(o.code, 10);
  EXPECT_EQ(o.err.rfind("error: no-records: ", 0), 0u) << o.err;
  EXPECT_EQ(cli({"report", "--results-dir", dir.path().string(), "--format", "pdf"}).code, 2);
}
