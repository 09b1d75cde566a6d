#include "xoff/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "xoff/error.hpp"

namespace xoff {

void AttributionConfig::validate() const {
  if (num_steps < 2) throw ArgumentError("integrated gradients needs at least 2 steps");
  if (!(completeness_tolerance > 0.0)) {
    throw ArgumentError("completeness_tolerance must be positive");
  }
}

RowAttribution integrated_gradients(const SequenceClassifier& model, ConstMatrixView input,
                                    ConstMatrixView baseline, int num_steps) {
  if (num_steps < 2) throw ArgumentError("integrated gradients needs at least 2 steps");
  if (input.rows != baseline.rows || input.cols != baseline.cols) {
    throw ArgumentError("input and baseline shapes differ");
  }
  if (input.rows == 0) throw ArgumentError("nothing to attribute");
  const std::size_t T = input.rows;
  const std::size_t E = input.cols;
  const auto m = static_cast<std::size_t>(num_steps);

  Matrix diff(T, E);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < E; ++j) diff(t, j) = input(t, j) - baseline(t, j);
  }

  // Per step and row: sum_j diff_j * dF/dx_j at the step's point. Summed in
  // step order afterwards, so the result does not depend on scheduling.
  std::vector<double> partial(m * T, 0.0);
  std::vector<int> bad(m, 0);
  const auto steps = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    Matrix point(T, E);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < E; ++j) point(t, j) = baseline(t, j) + alpha * diff(t, j);
    }
    std::unique_ptr<ForwardState> state;
    model.forward(point, ForwardOptions{}, &state);
    Matrix grad(T, E);
    model.backward(*state, 1.0, grad, {});
    double* row_out = partial.data() + static_cast<std::size_t>(k) * T;
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (std::size_t j = 0; j < E; ++j) {
        if (!std::isfinite(grad(t, j))) bad[static_cast<std::size_t>(k)] = 1;
        s += diff(t, j) * grad(t, j);
      }
      row_out[t] = s;
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (bad[k]) {
      throw NumericError("non-finite gradient at integration step " + std::to_string(k + 1) +
                         " of " + std::to_string(m));
    }
  }

  RowAttribution out;
  out.scores.assign(T, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t t = 0; t < T; ++t) out.scores[t] += partial[k * T + t];
  }
  for (auto& s : out.scores) s /= static_cast<double>(m);
  out.output = model.forward(input, ForwardOptions{}, nullptr);
  out.baseline_output = model.forward(baseline, ForwardOptions{}, nullptr);
  const double total = std::accumulate(out.scores.begin(), out.scores.end(), 0.0);
  out.residual = std::abs(total - (out.output - out.baseline_output));
  return out;
}

AttributionResult integrated_gradients(const Checkpoint& checkpoint,
                                       const LabeledExample& example,
                                       const AttributionConfig& config) {
  config.validate();
  if (!checkpoint.model || !checkpoint.tokenizer) {
    throw ArgumentError("attribution needs a loaded checkpoint");
  }
  const SequenceClassifier& model = *checkpoint.model;
  const Encoding enc = checkpoint.tokenizer->encode(example.text);
  if (enc.words.empty()) throw ArgumentError("example " + example.id + " has no tokens");

  const Matrix input = model.embed(enc.ids);
  std::vector<int> baseline_ids = enc.ids;
  const int pad = checkpoint.tokenizer->vocabulary().pad_id();
  for (std::size_t i = 0; i < baseline_ids.size(); ++i) {
    if (enc.word_index[i] >= 0) baseline_ids[i] = pad;
  }
  const Matrix baseline = model.embed(baseline_ids);
  const RowAttribution raw = integrated_gradients(model, input, baseline, config.num_steps);

  AttributionResult r;
  r.example_id = example.id;
  r.gold = example.label;
  r.pieces = enc.pieces;
  r.piece_scores = raw.scores;
  // Words cut off by truncation have no pieces and are left out.
  std::vector<int> word_to_token(enc.words.size(), -1);
  for (std::size_t i = 0; i < enc.pieces.size(); ++i) {
    const int w = enc.word_index[i];
    if (w < 0) continue;
    if (word_to_token[static_cast<std::size_t>(w)] < 0) {
      word_to_token[static_cast<std::size_t>(w)] = static_cast<int>(r.tokens.size());
      r.tokens.push_back(enc.words[static_cast<std::size_t>(w)]);
      r.scores.push_back(0.0);
    }
    r.scores[static_cast<std::size_t>(word_to_token[static_cast<std::size_t>(w)])] += raw.scores[i];
  }
  r.logit = raw.output;
  r.baseline_logit = raw.baseline_output;
  r.prediction = sigmoid(raw.output);
  r.baseline_prediction = sigmoid(raw.baseline_output);
  r.completeness_residual = raw.residual;
  r.num_steps = config.num_steps;
  return r;
}

double completeness_residual(const AttributionResult& result) {
  return result.completeness_residual;
}

bool completeness_ok(const AttributionResult& result, const AttributionConfig& config) {
  return result.completeness_residual <=
         config.completeness_tolerance * std::abs(result.logit - result.baseline_logit) + 1e-4;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

double max_abs(const std::vector<double>& scores) {
  double m = 0.0;
  for (double s : scores) m = std::max(m, std::abs(s));
  return m;
}

std::string predicted_name(double p) { return p > 0.5 ? "OFFENSIVE" : "NOT_OFFENSIVE"; }

std::string header_line(const AttributionResult& r) {
  std::string h = "prediction " + format("%.4f", r.prediction) + " (" +
                  predicted_name(r.prediction) + ")";
  if (r.gold) h += "  gold " + std::string(label_token(*r.gold));
  h += "  baseline " + format("%.4f", r.baseline_prediction);
  h += "  residual " + format("%.3g", r.completeness_residual);
  return h;
}

// Channel value blending white toward the class color.
int blend(int target, double intensity) {
  return static_cast<int>(std::lround(255.0 - (255.0 - target) * intensity));
}

std::string render_terminal(const AttributionResult& r, const RenderOptions& o) {
  std::string out;
  if (!r.example_id.empty()) out += r.example_id + "  ";
  out += header_line(r) + "\n";
  const double peak = max_abs(r.scores);
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    const double s = r.scores[i];
    if (!o.color) {
      out += r.tokens[i];
      if (peak > 0.0 && s != 0.0) out += "(" + format("%+.3f", s) + ")";
      continue;
    }
    if (peak == 0.0 || s == 0.0) {
      out += r.tokens[i];
      continue;
    }
    const double intensity = std::abs(s) / peak;
    const int red = s > 0 ? 220 : 22, green = s > 0 ? 38 : 163, blue = s > 0 ? 38 : 74;
    out += "\x1b[30;48;2;" + std::to_string(blend(red, intensity)) + ";" +
           std::to_string(blend(green, intensity)) + ";" +
           std::to_string(blend(blue, intensity)) + "m" + r.tokens[i] + "\x1b[0m";
  }
  out += "\n";
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
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string html_section(const AttributionResult& r) {
  std::string out = "<section class=\"example\">\n";
  if (!r.example_id.empty()) out += "<h2>" + escape_html(r.example_id) + "</h2>\n";
  out += "<p class=\"meta\">" + escape_html(header_line(r)) + "</p>\n<p class=\"tokens\">";
  const double peak = max_abs(r.scores);
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    const double s = r.scores[i];
    const std::string title = format("%+.6f", s);
    if (peak == 0.0 || s == 0.0) {
      out += "<span class=\"tok\" title=\"" + title + "\">" + escape_html(r.tokens[i]) + "</span>";
      continue;
    }
    const double intensity = std::abs(s) / peak;
    const char* rgb = s > 0 ? "220, 38, 38" : "22, 163, 74";
    out += "<span class=\"tok\" title=\"" + title + "\" style=\"background-color: rgba(" + rgb +
           ", " + format("%.3f", intensity) + ")\">" + escape_html(r.tokens[i]) + "</span>";
  }
  out += "</p>\n</section>\n";
  return out;
}

std::string html_document(const std::string& title, const std::string& body) {
  return "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n<title>" +
         escape_html(title) +
         "</title>\n<style>\n"
         "body { font-family: sans-serif; margin: 2em; }\n"
         ".tok { padding: 0.1em 0.2em; border-radius: 0.2em; }\n"
         ".meta { color: #555; font-size: 0.9em; }\n"
         ".legend span { padding: 0.1em 0.4em; }\n"
         "</style>\n</head>\n<body>\n<h1>" +
         escape_html(title) +
         "</h1>\n<p class=\"legend\"><span style=\"background-color: rgba(220, 38, 38, 0.8)\">"
         "toward OFFENSIVE</span> <span style=\"background-color: rgba(22, 163, 74, 0.8)\">"
         "toward NOT_OFFENSIVE</span></p>\n" +
         body + "</body>\n</html>\n";
}

}  // namespace

std::string render_importance(const AttributionResult& result, RenderFormat format,
                              const RenderOptions& options) {
  if (format == RenderFormat::kTerminal) return render_terminal(result, options);
  return html_document(options.title, html_section(result));
}

std::string render_html_report(std::span<const AttributionResult> results,
                               const RenderOptions& options) {
  std::string body;
  for (const auto& r : results) body += html_section(r);
  return html_document(options.title, body);
}

std::vector<FalsePositive> collect_false_positives(const Checkpoint& checkpoint,
                                                   const Split& split, std::size_t limit) {
  std::vector<FalsePositive> out;
  if (split.empty() || limit == 0) return out;
  const auto predictions = predict_proba(checkpoint, split);
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i].label == Label::kNotOffensive && predictions.labels[i] == Label::kOffensive) {
      out.push_back({split[i], predictions.probabilities[i]});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const FalsePositive& a, const FalsePositive& b) {
    return a.probability > b.probability;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace xoff
