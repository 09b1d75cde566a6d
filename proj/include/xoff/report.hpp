#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/png_writer.hpp"
#include "xoff/protocols.hpp"

namespace xoff {

enum class ReportFormat { kCsv, kMarkdown, kPng, kHtml };

// Accepts csv, markdown (or markdown_table), png (or png_plot), html.
std::optional<ReportFormat> parse_report_format(std::string_view name);

// Mean and sample standard deviation of one cell over seeds.
struct CellSummary {
  double mean = 0.0;
  double spread = 0.0;
  int seeds = 0;
};

struct MatrixTable {
  std::vector<std::string> rows;     // settings
  std::vector<Language> columns;     // test languages
  std::vector<std::vector<std::optional<CellSummary>>> cells;
};

struct CurvePoint {
  double fraction = 0.0;
  std::size_t train_size = 0;
  CellSummary score;
};

struct Curve {
  std::string setting;  // "<base>" or "<base>+<helper>"
  std::vector<CurvePoint> points;
};

struct AugmentationRow {
  std::string setting;
  Language base = Language::english();
  std::optional<Language> helper;
  CellSummary score;
};

MatrixTable matrix_table(std::span<const RunRecord> records);
std::vector<Curve> few_shot_curves(std::span<const RunRecord> records);
// Augmentation runs plus the base-only score when the records hold one.
std::vector<AugmentationRow> augmentation_rows(std::span<const RunRecord> records);

std::string matrix_csv(const MatrixTable& table);
std::string augmentation_csv(std::span<const AugmentationRow> rows);
std::string curves_csv(std::span<const Curve> curves);
// Best cell per column in bold; "mean ± spread" when a cell has several seeds.
std::string markdown_report(std::span<const RunRecord> records);
std::string html_report(std::span<const RunRecord> records);
Image few_shot_plot(std::span<const Curve> curves);
Image matrix_heatmap(const MatrixTable& table);

// Writes into <results_dir>/report/ and returns the files written, in order.
// Throws NoRecordsError when there is nothing to report.
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& results_dir,
                                               ReportFormat format);

}  // namespace xoff
