#include "xoff/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "xoff/error.hpp"

namespace xoff {

ConfusionMatrix confusion_matrix(std::span<const Label> gold,
                                 std::span<const Label> predicted) {
  if (gold.size() != predicted.size()) {
    throw ArgumentError("gold and predicted lengths differ (" +
                        std::to_string(gold.size()) + " vs " +
                        std::to_string(predicted.size()) + ")");
  }
  if (gold.empty()) throw ArgumentError("cannot score an empty label sequence");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == Label::kOffensive;
    const bool p = predicted[i] == Label::kOffensive;
    if (g && p) ++m.tp;
    else if (!g && p) ++m.fp;
    else if (g && !p) ++m.fn;
    else ++m.tn;
  }
  return m;
}

double f1_binary_class(const ConfusionMatrix& m, Label positive_class) {
  const bool off = positive_class == Label::kOffensive;
  const double tp = static_cast<double>(off ? m.tp : m.tn);
  const double fp = static_cast<double>(off ? m.fp : m.fn);
  const double fn = static_cast<double>(off ? m.fn : m.fp);
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& m) {
  MetricsReport r;
  r.confusion = m;
  r.n = m.total();
  r.f1_offensive = f1_binary_class(m, Label::kOffensive);
  r.f1_not_offensive = f1_binary_class(m, Label::kNotOffensive);
  r.macro_f1 = (r.f1_offensive + r.f1_not_offensive) / 2.0;
  return r;
}

MetricsReport macro_f1(std::span<const Label> gold,
                       std::span<const Label> predicted) {
  return metrics_from_confusion(confusion_matrix(gold, predicted));
}

std::vector<Label> gold_labels(const Split& split) {
  std::vector<Label> out;
  out.reserve(split.size());
  for (const auto& ex : split) out.push_back(ex.label);
  return out;
}

std::string reports_to_csv(std::span<const LabeledReport> reports) {
  std::ostringstream out;
  out << "row,column,macro_f1,f1_offensive,f1_not_offensive,tp,fp,fn,tn,n\n";
  char buf[128];
  for (const auto& r : reports) {
    const auto& m = r.report;
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%zu,%zu,%zu,%zu,%zu",
                  m.macro_f1, m.f1_offensive, m.f1_not_offensive, m.confusion.tp,
                  m.confusion.fp, m.confusion.fn, m.confusion.tn, m.n);
    out << r.row << ',' << r.column << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace xoff
