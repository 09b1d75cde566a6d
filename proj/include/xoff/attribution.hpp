#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/classifier.hpp"
#include "xoff/corpus.hpp"
#include "xoff/tensor.hpp"

namespace xoff {

struct AttributionConfig {
  // Midpoint Riemann sum with this many gradient evaluations.
  int num_steps = 50;
  // The only baseline: [PAD] embeddings in place of every content token,
  // boundary tokens kept.
  enum class Baseline { kPadEmbeddingSequence };
  Baseline baseline = Baseline::kPadEmbeddingSequence;
  double completeness_tolerance = 1e-2;

  // Throws ArgumentError.
  void validate() const;
};

// Per input row attribution of a model's logit.
struct RowAttribution {
  std::vector<double> scores;  // one per embedding row
  double output = 0.0;          // F(input)
  double baseline_output = 0.0;  // F(baseline)
  double residual = 0.0;        // |sum(scores) - (output - baseline_output)|
};

// Integrated Gradients of the pre-sigmoid logit, straight-line path from
// `baseline` to `input`, m-point midpoint rule. Each row's score is the sum
// over its embedding coordinates. Throws NumericError on a non-finite
// gradient, naming the step.
RowAttribution integrated_gradients(const SequenceClassifier& model,
                                    ConstMatrixView input,
                                    ConstMatrixView baseline, int num_steps);

struct AttributionResult {
  std::string example_id;
  std::optional<Label> gold;
  // Surface words, word-piece scores summed into their word.
  std::vector<std::string> tokens;
  std::vector<double> scores;
  // Raw per-piece view, boundary tokens included (their score is 0).
  std::vector<std::string> pieces;
  std::vector<double> piece_scores;
  double prediction = 0.0;           // sigmoid(F(input))
  double baseline_prediction = 0.0;  // sigmoid(F(baseline))
  double logit = 0.0;
  double baseline_logit = 0.0;
  double completeness_residual = 0.0;
  int num_steps = 0;

  friend bool operator==(const AttributionResult&, const AttributionResult&) = default;
};

// Throws ArgumentError when the example tokenizes to nothing.
AttributionResult integrated_gradients(const Checkpoint& checkpoint,
                                       const LabeledExample& example,
                                       const AttributionConfig& config = {});

double completeness_residual(const AttributionResult& result);

// True when the residual is within tolerance x |F(x) - F(x')| + 1e-4.
bool completeness_ok(const AttributionResult& result, const AttributionConfig& config);

enum class RenderFormat { kTerminal, kHtml };

struct RenderOptions {
  bool color = true;  // terminal only
  std::string title = "Token attributions";
};

// Red pushes toward OFFENSIVE, green toward NOT; intensity is |score| over
// the largest |score| of the result.
std::string render_importance(const AttributionResult& result, RenderFormat format,
                              const RenderOptions& options = {});

// Standalone HTML document with one section per result.
std::string render_html_report(std::span<const AttributionResult> results,
                               const RenderOptions& options = {});

struct FalsePositive {
  LabeledExample example;
  double probability = 0.0;
};

// Gold NOT, predicted OFFENSIVE, by descending probability (ties keep split
// order), at most `limit`.
std::vector<FalsePositive> collect_false_positives(const Checkpoint& checkpoint,
                                                   const Split& split,
                                                   std::size_t limit);

}  // namespace xoff
