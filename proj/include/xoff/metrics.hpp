#pragma once

#include <span>
#include <string>
#include <vector>

#include "xoff/corpus.hpp"

namespace xoff {

// Positive class is OFFENSIVE.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricsReport {
  double macro_f1 = 0.0;
  double f1_offensive = 0.0;
  double f1_not_offensive = 0.0;
  ConfusionMatrix confusion;
  std::size_t n = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const Label> gold,
                                 std::span<const Label> predicted);

// F1 of `positive_class`. A class with no true and no predicted instances
// scores 0.
double f1_binary_class(const ConfusionMatrix& matrix, Label positive_class);

MetricsReport macro_f1(std::span<const Label> gold,
                       std::span<const Label> predicted);
MetricsReport metrics_from_confusion(const ConfusionMatrix& matrix);

std::vector<Label> gold_labels(const Split& split);

struct LabeledReport {
  std::string row;
  std::string column;
  MetricsReport report;
};

// One line per report: row,column,macro_f1,f1_off,f1_not,tp,fp,fn,tn,n
std::string reports_to_csv(std::span<const LabeledReport> reports);

}  // namespace xoff
