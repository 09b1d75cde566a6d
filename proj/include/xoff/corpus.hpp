#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/language.hpp"

namespace xoff {

// Positive class is kOffensive throughout.
enum class Label : std::uint8_t { kNotOffensive = 0, kOffensive = 1 };

std::string_view label_token(Label label);  // "OFF" / "NOT"
std::optional<Label> parse_label_token(std::string_view token);

struct LabeledExample {
  std::string id;
  std::string text;
  Label label = Label::kNotOffensive;
  Language language = Language::english();

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

using Split = std::vector<LabeledExample>;

enum class SplitKind { kTrain, kDev, kTest };
std::string_view split_name(SplitKind kind);

struct LanguageCorpus {
  Language language = Language::english();
  Split train;
  Split dev;
  Split test;

  const Split& split(SplitKind kind) const;

  friend bool operator==(const LanguageCorpus&, const LanguageCorpus&) = default;
};

// Checks split disjointness by id and, unless `allow_degenerate`, that every
// split holds both classes. Throws ArgumentError.
void validate_corpus(const LanguageCorpus& corpus, bool allow_degenerate = false);

// Language-keyed registry; iteration follows the fixed language order.
class CorpusCatalog {
 public:
  void add(LanguageCorpus corpus);
  bool contains(const Language& language) const;
  const LanguageCorpus& at(const Language& language) const;
  std::vector<Language> languages() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<Language, LanguageCorpus> entries_;
};

enum class CorpusFormat { kOlidTsv };

// Reads <dir>/train.tsv, dev.tsv and test.tsv. When test.tsv has no label
// column the labels come from <dir>/test_labels.tsv (id<TAB>label).
LanguageCorpus load_corpus(const std::filesystem::path& dir,
                           const Language& language,
                           CorpusFormat format = CorpusFormat::kOlidTsv);

Split load_split(const std::filesystem::path& file, const Language& language,
                 SplitKind kind,
                 const std::optional<std::filesystem::path>& labels_file = {});

// NFC, URLs -> "URL", whitespace runs collapsed, trimmed.
std::string normalize_text(std::string_view raw);

// ceil(fraction * n), robust to floating-point noise in the product.
std::size_t slice_size(std::size_t n, double fraction);

// Label-stratified deterministic subsample; returned in original order.
Split slice_fraction(const Split& split, double fraction, std::uint64_t seed);

struct TaggedSplit {
  Language language;
  std::span<const LabeledExample> examples;
};

// Multiset union of the inputs, shuffled by `seed`.
Split concatenate_corpora(std::span<const TaggedSplit> splits,
                          std::uint64_t seed);

struct SplitStats {
  std::size_t size = 0;
  std::size_t offensive = 0;
  double offensive_share() const {
    return size == 0 ? 0.0 : static_cast<double>(offensive) / size;
  }
};

SplitStats split_stats(const Split& split);

struct CorpusSummaryRow {
  Language language;
  SplitStats train;
  SplitStats dev;
  SplitStats test;
};

std::vector<CorpusSummaryRow> corpus_summary(const CorpusCatalog& catalog);
std::string format_corpus_summary(const std::vector<CorpusSummaryRow>& rows);

}  // namespace xoff
