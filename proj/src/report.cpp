#include "xoff/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "xoff/error.hpp"

namespace xoff {

namespace fs = std::filesystem;

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "markdown_table" || name == "md") return ReportFormat::kMarkdown;
  if (name == "png" || name == "png_plot") return ReportFormat::kPng;
  if (name == "html") return ReportFormat::kHtml;
  return std::nullopt;
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

CellSummary summarize(const std::vector<double>& values) {
  CellSummary s;
  s.seeds = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.spread = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::string cell_text(const CellSummary& c) {
  std::string t = fixed(c.mean);
  if (c.seeds > 1) t += " ± " + fixed(c.spread);
  return t;
}

std::string row_label(const std::string& setting) {
  if (setting == "all") return "All";
  try {
    return Language::parse(setting).display_name();
  } catch (const Error&) {
  }
  const auto plus = setting.find('+');
  if (plus != std::string::npos) {
    try {
      return Language::parse(setting.substr(0, plus)).display_name() + " + " +
             Language::parse(setting.substr(plus + 1)).display_name();
    } catch (const Error&) {
    }
  }
  return setting;
}

bool is_matrix_kind(ExperimentKind k) {
  return k == ExperimentKind::kZeroShotMatrix || k == ExperimentKind::kJointAll ||
         k == ExperimentKind::kMonolingual;
}

// Best mean per column, compared at the printed precision so ties all bold.
std::vector<std::optional<std::string>> best_means(const MatrixTable& t) {
  std::vector<std::optional<double>> best(t.columns.size());
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& cell = t.cells[r][c];
      if (cell && (!best[c] || cell->mean > *best[c])) best[c] = cell->mean;
    }
  }
  std::vector<std::optional<std::string>> out(best.size());
  for (std::size_t c = 0; c < best.size(); ++c) {
    if (best[c]) out[c] = fixed(*best[c]);
  }
  return out;
}

bool is_best(const std::vector<std::optional<std::string>>& best, std::size_t c,
             const CellSummary& cell) {
  return best[c] && *best[c] == fixed(cell.mean);
}

std::map<Language, ConfusionMatrix> joint_confusions(std::span<const RunRecord> records) {
  std::map<Language, ConfusionMatrix> out;
  for (const auto& r : records) {
    if (!is_matrix_kind(r.kind) || r.setting != "all") continue;
    auto& m = out[r.test_language];
    m.tp += r.metrics.confusion.tp;
    m.fp += r.metrics.confusion.fp;
    m.fn += r.metrics.confusion.fn;
    m.tn += r.metrics.confusion.tn;
  }
  return out;
}

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

MatrixTable matrix_table(std::span<const RunRecord> records) {
  const ResultsMatrix order = matrix_from_records(records);
  std::map<std::pair<std::string, Language>, std::vector<double>> values;
  for (const auto& r : records) {
    if (is_matrix_kind(r.kind)) values[{r.setting, r.test_language}].push_back(r.metrics.macro_f1);
  }
  MatrixTable t;
  t.rows = order.rows;
  t.columns = order.columns;
  t.cells.assign(t.rows.size(), std::vector<std::optional<CellSummary>>(t.columns.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto it = values.find({t.rows[r], t.columns[c]});
      if (it != values.end()) t.cells[r][c] = summarize(it->second);
    }
  }
  return t;
}

std::vector<Curve> few_shot_curves(std::span<const RunRecord> records) {
  std::map<std::string, std::map<double, std::pair<std::size_t, std::vector<double>>>> grouped;
  for (const auto& r : records) {
    if (r.kind != ExperimentKind::kFewShotCurve || !r.fraction) continue;
    auto& point = grouped[r.setting][*r.fraction];
    point.first = r.train_size;
    point.second.push_back(r.metrics.macro_f1);
  }
  std::vector<Curve> out;
  for (const auto& [setting, points] : grouped) {
    Curve c{setting, {}};
    for (const auto& [fraction, p] : points) c.points.push_back({fraction, p.first, summarize(p.second)});
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AugmentationRow> augmentation_rows(std::span<const RunRecord> records) {
  std::map<std::pair<Language, std::string>, std::vector<double>> augmented;
  for (const auto& r : records) {
    if (r.kind != ExperimentKind::kAugmentation) continue;
    augmented[{r.test_language, r.setting}].push_back(r.metrics.macro_f1);
  }
  if (augmented.empty()) return {};
  std::vector<AugmentationRow> out;
  Language current = augmented.begin()->first.first;
  auto add_base = [&](const Language& base) {
    std::vector<double> v;
    for (const auto& r : records) {
      const bool full_fewshot = r.kind == ExperimentKind::kFewShotCurve && !r.helper &&
                                r.fraction && *r.fraction == 1.0;
      if ((is_matrix_kind(r.kind) || full_fewshot) && r.setting == base.code() &&
          r.test_language == base) {
        v.push_back(r.metrics.macro_f1);
      }
    }
    if (!v.empty()) out.push_back({base.code(), base, std::nullopt, summarize(v)});
  };
  bool first = true;
  for (const auto& [key, values] : augmented) {
    if (first || key.first != current) {
      current = key.first;
      add_base(current);
      first = false;
    }
    const auto plus = key.second.find('+');
    std::optional<Language> helper;
    if (plus != std::string::npos) {
      try {
        helper = Language::parse(key.second.substr(plus + 1));
      } catch (const Error&) {
      }
    }
    out.push_back({key.second, key.first, helper, summarize(values)});
  }
  return out;
}

std::string matrix_csv(const MatrixTable& t) {
  std::string out = "setting";
  for (const auto& c : t.columns) out += "," + c.code();
  out += "\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += t.rows[r];
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      out += ",";
      if (t.cells[r][c]) out += fixed(t.cells[r][c]->mean);
    }
    out += "\n";
  }
  return out;
}

std::string augmentation_csv(std::span<const AugmentationRow> rows) {
  std::string out = "setting,base,helper,macro_f1,spread,seeds\n";
  for (const auto& r : rows) {
    out += r.setting + "," + r.base.code() + "," + (r.helper ? r.helper->code() : "none") + "," +
           fixed(r.score.mean) + "," + fixed(r.score.spread) + "," + std::to_string(r.score.seeds) +
           "\n";
  }
  return out;
}

std::string curves_csv(std::span<const Curve> curves) {
  std::string out = "fraction,setting,train_size,macro_f1,spread,seeds\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += fixed(p.fraction) + "," + c.setting + "," + std::to_string(p.train_size) + "," +
             fixed(p.score.mean) + "," + fixed(p.score.spread) + "," +
             std::to_string(p.score.seeds) + "\n";
    }
  }
  return out;
}

std::string markdown_report(std::span<const RunRecord> records) {
  std::string out = "# Results\n";
  const MatrixTable t = matrix_table(records);
  if (!t.rows.empty()) {
    out += "\n## Macro-F1 by training setting and test language\n\n| Training setting |";
    for (const auto& c : t.columns) out += " " + c.display_name() + " |";
    out += "\n|---|";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += "---|";
    out += "\n";
    const auto best = best_means(t);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      out += "| " + row_label(t.rows[r]) + " |";
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        const auto& cell = t.cells[r][c];
        if (!cell) {
          out += " – |";
        } else if (is_best(best, c, *cell)) {
          out += " **" + cell_text(*cell) + "** |";
        } else {
          out += " " + cell_text(*cell) + " |";
        }
      }
      out += "\n";
    }
  }
  const auto confusions = joint_confusions(records);
  for (const auto& [lang, m] : confusions) {
    out += "\n## Confusion matrix, joint model on " + lang.display_name() +
           "\n\n| gold \\ predicted | NOT | OFF |\n|---|---|---|\n| NOT | " +
           std::to_string(m.tn) + " | " + std::to_string(m.fp) + " |\n| OFF | " +
           std::to_string(m.fn) + " | " + std::to_string(m.tp) + " |\n";
  }
  const auto aug = augmentation_rows(records);
  if (!aug.empty()) {
    out += "\n## Augmentation\n\n| Training data | Test language | Macro-F1 |\n|---|---|---|\n";
    for (const auto& r : aug) {
      out += "| " + row_label(r.setting) + " | " + r.base.display_name() + " | " +
             cell_text(r.score) + " |\n";
    }
  }
  const auto curves = few_shot_curves(records);
  if (!curves.empty()) {
    out += "\n## Few-shot curves\n\n| Fraction | Training data | Train size | Macro-F1 |\n"
           "|---|---|---|---|\n";
    for (const auto& c : curves) {
      for (const auto& p : c.points) {
        out += "| " + fixed(p.fraction, 2) + " | " + row_label(c.setting) + " | " +
               std::to_string(p.train_size) + " | " + cell_text(p.score) + " |\n";
      }
    }
  }
  return out;
}

namespace {

constexpr Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},
                            {255, 127, 14}, {148, 103, 189}, {140, 86, 75}};

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string svg_curves(std::span<const Curve> curves) {
  const int W = 640, H = 400, L = 60, R = 160, T = 30, B = 50;
  const int pw = W - L - R, ph = H - T - B;
  auto X = [&](double f) { return L + f * pw; };
  auto Y = [&](double v) { return T + (1.0 - v) * ph; };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
                  "\" height=\"" + std::to_string(H) + "\">\n";
  s += "<rect x=\"" + std::to_string(L) + "\" y=\"" + std::to_string(T) + "\" width=\"" +
       std::to_string(pw) + "\" height=\"" + std::to_string(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    s += "<text x=\"" + fixed(X(v), 1) + "\" y=\"" + std::to_string(H - B + 18) +
         "\" font-size=\"11\" text-anchor=\"middle\">" + fixed(v, 1) + "</text>\n";
    s += "<text x=\"" + std::to_string(L - 6) + "\" y=\"" + fixed(Y(v) + 4, 1) +
         "\" font-size=\"11\" text-anchor=\"end\">" + fixed(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + fixed(X(0.5), 1) + "\" y=\"" + std::to_string(H - 10) +
       "\" font-size=\"12\" text-anchor=\"middle\">fraction of base training data</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::string color = hex(kPalette[i % std::size(kPalette)]);
    std::string pts;
    for (const auto& p : curves[i].points) {
      if (!pts.empty()) pts += ' ';
      pts += fixed(X(p.fraction), 1) + "," + fixed(Y(p.score.mean), 1);
    }
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts +
         "\"/>\n";
    const int ly = T + 14 + static_cast<int>(i) * 18;
    s += "<line x1=\"" + std::to_string(W - R + 12) + "\" y1=\"" + std::to_string(ly - 4) +
         "\" x2=\"" + std::to_string(W - R + 32) + "\" y2=\"" + std::to_string(ly - 4) +
         "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + std::to_string(W - R + 38) + "\" y=\"" + std::to_string(ly) +
         "\" font-size=\"12\">" + escape_html(row_label(curves[i].setting)) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

std::string html_report(std::span<const RunRecord> records) {
  std::string body;
  const MatrixTable t = matrix_table(records);
  if (!t.rows.empty()) {
    body += "<h2>Macro-F1 by training setting and test language</h2>\n<table>\n<tr><th>Training setting</th>";
    for (const auto& c : t.columns) body += "<th>" + escape_html(c.display_name()) + "</th>";
    body += "</tr>\n";
    const auto best = best_means(t);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      body += "<tr><th>" + escape_html(row_label(t.rows[r])) + "</th>";
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        const auto& cell = t.cells[r][c];
        if (!cell) {
          body += "<td>–</td>";
        } else if (is_best(best, c, *cell)) {
          body += "<td><strong>" + escape_html(cell_text(*cell)) + "</strong></td>";
        } else {
          body += "<td>" + escape_html(cell_text(*cell)) + "</td>";
        }
      }
      body += "</tr>\n";
    }
    body += "</table>\n";
  }
  for (const auto& [lang, m] : joint_confusions(records)) {
    body += "<h2>Confusion matrix, joint model on " + escape_html(lang.display_name()) +
            "</h2>\n<table>\n<tr><th>gold \\ predicted</th><th>NOT</th><th>OFF</th></tr>\n"
            "<tr><th>NOT</th><td>" + std::to_string(m.tn) + "</td><td>" + std::to_string(m.fp) +
            "</td></tr>\n<tr><th>OFF</th><td>" + std::to_string(m.fn) + "</td><td>" +
            std::to_string(m.tp) + "</td></tr>\n</table>\n";
  }
  const auto aug = augmentation_rows(records);
  if (!aug.empty()) {
    body += "<h2>Augmentation</h2>\n<table>\n<tr><th>Training data</th><th>Test language</th>"
            "<th>Macro-F1</th></tr>\n";
    for (const auto& r : aug) {
      body += "<tr><td>" + escape_html(row_label(r.setting)) + "</td><td>" +
              escape_html(r.base.display_name()) + "</td><td>" + escape_html(cell_text(r.score)) +
              "</td></tr>\n";
    }
    body += "</table>\n";
  }
  const auto curves = few_shot_curves(records);
  if (!curves.empty()) body += "<h2>Few-shot curves</h2>\n" + svg_curves(curves);
  return "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n"
         "<title>Results</title>\n<style>\n"
         "body { font-family: sans-serif; margin: 2em; }\n"
         "table { border-collapse: collapse; margin-bottom: 1.5em; }\n"
         "th, td { border: 1px solid #ccc; padding: 0.3em 0.7em; text-align: right; }\n"
         "</style>\n</head>\n<body>\n<h1>Results</h1>\n" +
         body + "</body>\n</html>\n";
}

Image few_shot_plot(std::span<const Curve> curves) {
  const int W = 720, H = 440, L = 60, R = 170, T = 40, B = 60;
  const int pw = W - L - R, ph = H - T - B;
  Image img(W, H);
  const Rgb axis{60, 60, 60}, grid{225, 225, 225};
  auto X = [&](double f) { return L + static_cast<int>(std::lround(f * pw)); };
  auto Y = [&](double v) { return T + static_cast<int>(std::lround((1.0 - v) * ph)); };
  for (int k = 0; k <= 5; ++k) {
    const double v = k / 5.0;
    img.line(L, Y(v), L + pw, Y(v), grid);
    img.line(X(v), T, X(v), T + ph, grid);
    const std::string label = fixed(v, 1);
    img.text(X(v) - Image::text_width(label) / 2, T + ph + 8, label, axis);
    img.text(L - 8 - Image::text_width(label), Y(v) - 3, label, axis);
  }
  img.line(L, T, L, T + ph, axis);
  img.line(L, T + ph, L + pw, T + ph, axis);
  const std::string xlabel = "FRACTION OF BASE TRAINING DATA";
  img.text(L + pw / 2 - Image::text_width(xlabel) / 2, T + ph + 30, xlabel, axis);
  img.text(L, 14, "MACRO-F1", axis, 2);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Rgb color = kPalette[i % std::size(kPalette)];
    const auto& pts = curves[i].points;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      const int x = X(pts[p].fraction), y = Y(pts[p].score.mean);
      if (p > 0) img.line(X(pts[p - 1].fraction), Y(pts[p - 1].score.mean), x, y, color, 2);
      img.fill_rect(x - 2, y - 2, 5, 5, color);
    }
    const int ly = T + 10 + static_cast<int>(i) * 18;
    img.line(W - R + 14, ly + 3, W - R + 34, ly + 3, color, 2);
    img.text(W - R + 40, ly, curves[i].setting, axis);
  }
  return img;
}

Image matrix_heatmap(const MatrixTable& t) {
  const int cw = 80, ch = 36, L = 70, T = 40;
  const int W = L + cw * static_cast<int>(std::max<std::size_t>(t.columns.size(), 1)) + 20;
  const int H = T + ch * static_cast<int>(std::max<std::size_t>(t.rows.size(), 1)) + 20;
  Image img(W, H);
  const Rgb ink{30, 30, 30};
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    const std::string label = t.columns[c].code();
    img.text(L + static_cast<int>(c) * cw + cw / 2 - Image::text_width(label) / 2, T - 16, label, ink);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int y = T + static_cast<int>(r) * ch;
    img.text(L - 8 - Image::text_width(t.rows[r]), y + ch / 2 - 3, t.rows[r], ink);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const int x = L + static_cast<int>(c) * cw;
      const auto& cell = t.cells[r][c];
      Rgb fill{240, 240, 240};
      if (cell) {
        const double v = std::clamp(cell->mean, 0.0, 1.0);
        fill = {static_cast<std::uint8_t>(std::lround(255 - 200 * v)),
                static_cast<std::uint8_t>(std::lround(255 - 130 * v)), 255};
      }
      img.fill_rect(x + 1, y + 1, cw - 2, ch - 2, fill);
      const std::string text = cell ? fixed(cell->mean) : "-";
      img.text(x + cw / 2 - Image::text_width(text) / 2, y + ch / 2 - 3, text, ink);
    }
  }
  return img;
}

namespace {

fs::path write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("cannot write " + file.string());
  return file;
}

}  // namespace

std::vector<fs::path> emit_report(const fs::path& results_dir, ReportFormat format) {
  const auto records = load_runs(results_dir);
  const fs::path dir = results_dir / "report";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const MatrixTable table = matrix_table(records);
  const auto curves = few_shot_curves(records);
  const auto aug = augmentation_rows(records);
  std::vector<fs::path> written;
  switch (format) {
    case ReportFormat::kCsv:
      if (!table.rows.empty()) written.push_back(write_text(dir / "matrix.csv", matrix_csv(table)));
      if (!aug.empty()) written.push_back(write_text(dir / "augmentation.csv", augmentation_csv(aug)));
      if (!curves.empty()) written.push_back(write_text(dir / "fewshot.csv", curves_csv(curves)));
      break;
    case ReportFormat::kMarkdown:
      written.push_back(write_text(dir / "report.md", markdown_report(records)));
      break;
    case ReportFormat::kPng:
      if (!table.rows.empty()) {
        write_png(matrix_heatmap(table), dir / "matrix.png");
        written.push_back(dir / "matrix.png");
      }
      if (!curves.empty()) {
        write_png(few_shot_plot(curves), dir / "fewshot.png");
        written.push_back(dir / "fewshot.png");
      }
      break;
    case ReportFormat::kHtml:
      written.push_back(write_text(dir / "report.html", html_report(records)));
      break;
  }
  if (written.empty()) {
    throw NoRecordsError("no matrix, augmentation or few-shot records under " +
                         results_dir.string());
  }
  return written;
}

}  // namespace xoff
