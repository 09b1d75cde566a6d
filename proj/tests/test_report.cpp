#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <png.h>

#include "oracles/html_check.hpp"
#include "support.hpp"
#include "xoff/error.hpp"
#include "xoff/report.hpp"

using namespace xoff;
using testing_support::TempDir;

namespace {

const Language A = Language::synthetic("a");
const Language B = Language::synthetic("b");

RunRecord record(ExperimentKind kind, const std::string& setting, const Language& test,
                 double f1, std::uint64_t seed = 42) {
  RunRecord r;
  r.spec_hash = "00ff00ff00ff00ff";
  r.kind = kind;
  r.setting = setting;
  r.train_languages = {A};
  r.test_language = test;
  r.train_size = 10;
  r.metrics.macro_f1 = f1;
  r.metrics.confusion = {3, 1, 2, 4};
  r.metrics.n = 10;
  r.seed = seed;
  r.data_hash = "d";
  return r;
}

std::vector<RunRecord> matrix_records() {
  const auto Z = ExperimentKind::kZeroShotMatrix;
  return {record(Z, "syn_a", A, 0.9), record(Z, "syn_a", B, 0.4), record(Z, "syn_b", A, 0.45),
          record(Z, "syn_b", B, 0.95), record(Z, "all", A, 0.9), record(Z, "all", B, 0.93)};
}

std::vector<RunRecord> fewshot_records() {
  std::vector<RunRecord> out;
  for (int k = 1; k <= 4; ++k) {
    RunRecord r = record(ExperimentKind::kFewShotCurve, "syn_a", A, 0.5 + 0.1 * k);
    r.fraction = k / 4.0;
    r.train_size = static_cast<std::size_t>(10 * k);
    out.push_back(r);
  }
  return out;
}

struct Decoded {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
};

// libpng's own reader as the independent decoder.
Decoded decode(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  Decoded d;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) return d;
  image.format = PNG_FORMAT_RGB;
  d.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, d.rgb.data(), 0, nullptr)) return d;
  d.width = static_cast<int>(image.width);
  d.height = static_cast<int>(image.height);
  return d;
}

void persist_all(const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  for (const auto& r : records) persist_run(r, dir);
}

}  // namespace

TEST(ReportFormat, Names) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::kCsv);
  EXPECT_EQ(parse_report_format("markdown_table"), ReportFormat::kMarkdown);
  EXPECT_EQ(parse_report_format("png_plot"), ReportFormat::kPng);
  EXPECT_EQ(parse_report_format("html"), ReportFormat::kHtml);
  EXPECT_FALSE(parse_report_format("pdf").has_value());
}

TEST(ReportTables, SeedsAveragedWithSampleSpread) {
  auto records = matrix_records();
  records.push_back(record(ExperimentKind::kZeroShotMatrix, "syn_a", A, 0.7, 43));
  const MatrixTable t = matrix_table(records);
  const auto& cell = *t.cells[0][0];
  const double mean = (0.9 + 0.7) / 2.0;
  const double spread = std::sqrt(((0.9 - mean) * (0.9 - mean) + (0.7 - mean) * (0.7 - mean)) / 1.0);
  EXPECT_EQ(cell.seeds, 2);
  EXPECT_NEAR(cell.mean, mean, 1e-12);
  EXPECT_NEAR(cell.spread, spread, 1e-12);
  EXPECT_NE(markdown_report(records).find("0.8000 ± 0.1414"), std::string::npos);
  EXPECT_EQ(matrix_csv(t), "setting,syn_a,syn_b\nsyn_a,0.8000,0.4000\nsyn_b,0.4500,0.9500\n"
                           "all,0.9000,0.9300\n");
}

TEST(ReportTables, BestPerColumnBoldIncludingTies) {
  const std::string md = markdown_report(matrix_records());
  EXPECT_NE(md.find("**0.9500**"), std::string::npos) << md;
  std::size_t bold = 0;
  for (auto p = md.find("**0.9000**"); p != std::string::npos; p = md.find("**0.9000**", p + 1)) {
    ++bold;
  }
  EXPECT_EQ(bold, 2u);
  EXPECT_EQ(md.find("**0.4"), std::string::npos);
  EXPECT_NE(md.find("Confusion matrix, joint model"), std::string::npos);
}

TEST(ReportTables, CurvesOrderedByFraction) {
  auto records = fewshot_records();
  std::swap(records[0], records[3]);
  const auto curves = few_shot_curves(records);
  ASSERT_EQ(curves.size(), 1u);
  ASSERT_EQ(curves[0].points.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(curves[0].points[i].fraction, (i + 1) / 4.0);
  EXPECT_EQ(curves_csv(curves).substr(0, curves_csv(curves).find('\n')),
            "fraction,setting,train_size,macro_f1,spread,seeds");
}

TEST(ReportHtml, WellFormed) {
  auto records = matrix_records();
  const auto few = fewshot_records();
  records.insert(records.end(), few.begin(), few.end());
  const std::string html = html_report(records);
  EXPECT_EQ(oracle::xml_error(html), "");
  EXPECT_NE(html.find("<strong>0.9500</strong>"), std::string::npos);
}

TEST(Png, DecodesToSamePixels) {
  Image img(7, 5);
  img.fill_rect(1, 1, 3, 2, {10, 200, 30});
  img.set(6, 4, {1, 2, 3});
  const auto bytes = encode_png(img);
  const std::uint8_t signature[] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_TRUE(std::equal(signature, signature + 8, bytes.begin()));
  const Decoded d = decode(bytes);
  ASSERT_EQ(d.width, 7);
  ASSERT_EQ(d.height, 5);
  EXPECT_EQ(d.rgb, img.pixels());
}

TEST(Png, ChartsDecode) {
  const Decoded heat = decode(encode_png(matrix_heatmap(matrix_table(matrix_records()))));
  EXPECT_GT(heat.width, 0);
  const auto records = fewshot_records();
  const Decoded plot = decode(encode_png(few_shot_plot(few_shot_curves(records))));
  EXPECT_GT(plot.width, 0);
}

TEST(EmitReport, ByteIdenticalAcrossCalls) {
  TempDir dir;
  auto records = matrix_records();
  const auto few = fewshot_records();
  records.insert(records.end(), few.begin(), few.end());
  persist_all(records, dir.path());
  for (auto format : {ReportFormat::kCsv, ReportFormat::kMarkdown, ReportFormat::kPng,
                      ReportFormat::kHtml}) {
    const auto first = emit_report(dir.path(), format);
    ASSERT_FALSE(first.empty());
    std::vector<std::string> bytes;
    for (const auto& f : first) bytes.push_back(testing_support::read_file(f));
    const auto second = emit_report(dir.path(), format);
    ASSERT_EQ(second, first);
    for (std::size_t i = 0; i < second.size(); ++i) {
      EXPECT_EQ(testing_support::read_file(second[i]), bytes[i]) << second[i];
    }
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "report" / "matrix.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report" / "fewshot.png"));
}

TEST(EmitReport, NothingToReport) {
  TempDir dir;
  EXPECT_THROW(emit_report(dir.path(), ReportFormat::kCsv), NoRecordsError);
}
