#include "xoff/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "xoff/error.hpp"
#include "xoff/random.hpp"

namespace xoff {

std::string_view label_token(Label label) {
  return label == Label::kOffensive ? "OFF" : "NOT";
}

std::optional<Label> parse_label_token(std::string_view token) {
  if (token == "OFF") return Label::kOffensive;
  if (token == "NOT") return Label::kNotOffensive;
  return std::nullopt;
}

std::string_view split_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::kTrain: return "train";
    case SplitKind::kDev: return "dev";
    case SplitKind::kTest: return "test";
  }
  return "?";
}

const Split& LanguageCorpus::split(SplitKind kind) const {
  switch (kind) {
    case SplitKind::kTrain: return train;
    case SplitKind::kDev: return dev;
    case SplitKind::kTest: return test;
  }
  return train;
}

void validate_corpus(const LanguageCorpus& corpus, bool allow_degenerate) {
  std::unordered_map<std::string, SplitKind> owner;
  for (SplitKind kind : {SplitKind::kTrain, SplitKind::kDev, SplitKind::kTest}) {
    const Split& split = corpus.split(kind);
    std::unordered_set<std::string> local;
    bool has_off = false;
    bool has_not = false;
    for (const auto& ex : split) {
      if (!local.insert(ex.id).second) {
        throw ArgumentError("duplicate id '" + ex.id + "' in " +
                            std::string(split_name(kind)) + " split");
      }
      auto [it, inserted] = owner.emplace(ex.id, kind);
      if (!inserted) {
        throw ArgumentError("id '" + ex.id + "' appears in both " +
                            std::string(split_name(it->second)) + " and " +
                            std::string(split_name(kind)));
      }
      (ex.label == Label::kOffensive ? has_off : has_not) = true;
    }
    if (!allow_degenerate && !split.empty() && !(has_off && has_not)) {
      throw ArgumentError(std::string(split_name(kind)) + " split of " +
                          corpus.language.code() + " lacks one of the classes");
    }
  }
}

void CorpusCatalog::add(LanguageCorpus corpus) {
  const Language language = corpus.language;
  if (!entries_.emplace(language, std::move(corpus)).second) {
    throw ArgumentError("catalog already holds a corpus for " + language.code());
  }
}

bool CorpusCatalog::contains(const Language& language) const {
  return entries_.contains(language);
}

const LanguageCorpus& CorpusCatalog::at(const Language& language) const {
  auto it = entries_.find(language);
  if (it == entries_.end()) {
    throw ArgumentError("catalog has no corpus for " + language.code());
  }
  return it->second;
}

std::vector<Language> CorpusCatalog::languages() const {
  std::vector<Language> out;
  for (const auto& [lang, _] : entries_) out.push_back(lang);
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::unordered_map<std::string, Label> read_label_file(
    const std::filesystem::path& file, std::string_view split) {
  std::ifstream in(file);
  if (!in) {
    throw IngestionError("cannot open label file for " + std::string(split) +
                         " split: " + file.string());
  }
  std::unordered_map<std::string, Label> labels;
  std::string line;
  bool first = true;
  while (read_line(in, line)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 2) {
      throw IngestionError(file.string() + ": expected id<TAB>label, got '" +
                           line + "'");
    }
    const std::string id = trim_copy(fields[0]);
    const std::string token = trim_copy(fields[1]);
    if (first) {
      first = false;
      if (id == "id" && !parse_label_token(token)) continue;  // header
    }
    auto label = parse_label_token(token);
    if (!label) {
      throw IngestionError(std::string(split) + " labels: unknown label '" +
                           token + "' for row id " + id);
    }
    if (!labels.emplace(id, *label).second) {
      throw IngestionError(std::string(split) + " labels: duplicate id " + id);
    }
  }
  return labels;
}

}  // namespace

Split load_split(const std::filesystem::path& file, const Language& language,
                 SplitKind kind,
                 const std::optional<std::filesystem::path>& labels_file) {
  const std::string split(split_name(kind));
  std::ifstream in(file);
  if (!in) {
    throw IngestionError("missing or unreadable " + split +
                         " split file: " + file.string());
  }
  std::string line;
  if (!read_line(in, line)) {
    throw IngestionError(split + " split file is empty: " + file.string());
  }
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto header = split_tabs(line);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim_copy(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto text_col = column("tweet");
  const auto label_col = column("subtask_a");
  if (!id_col || !text_col) {
    throw IngestionError(split + " split header must contain 'id' and 'tweet': " +
                         file.string());
  }

  std::unordered_map<std::string, Label> external;
  if (!label_col) {
    if (!labels_file) {
      throw IngestionError(split + " split has no subtask_a column and no label file: " +
                           file.string());
    }
    external = read_label_file(*labels_file, split);
  }

  Split out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  const std::size_t needed =
      std::max({*id_col, *text_col, label_col.value_or(0)}) + 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < needed) {
      throw IngestionError(split + " split line " + std::to_string(line_no) +
                           ": expected at least " + std::to_string(needed) +
                           " tab-separated columns");
    }
    LabeledExample ex;
    ex.id = trim_copy(fields[*id_col]);
    ex.language = language;
    if (ex.id.empty()) {
      throw IngestionError(split + " split line " + std::to_string(line_no) +
                           ": empty id");
    }
    if (label_col) {
      const std::string token = trim_copy(fields[*label_col]);
      auto label = parse_label_token(token);
      if (!label) {
        throw IngestionError(split + " split: unknown label '" + token +
                             "' at row id " + ex.id);
      }
      ex.label = *label;
    } else {
      auto it = external.find(ex.id);
      if (it == external.end()) {
        throw IngestionError(split + " split: no label for row id " + ex.id);
      }
      ex.label = it->second;
    }
    ex.text = normalize_text(fields[*text_col]);
    if (ex.text.empty()) {
      throw IngestionError(split + " split: row id " + ex.id +
                           " is empty after normalization");
    }
    if (!seen.insert(ex.id).second) {
      throw IngestionError(split + " split: duplicate id " + ex.id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

LanguageCorpus load_corpus(const std::filesystem::path& dir,
                           const Language& language, CorpusFormat format) {
  if (format != CorpusFormat::kOlidTsv) {
    throw ArgumentError("unsupported corpus format");
  }
  LanguageCorpus corpus;
  corpus.language = language;
  corpus.train = load_split(dir / "train.tsv", language, SplitKind::kTrain);
  corpus.dev = load_split(dir / "dev.tsv", language, SplitKind::kDev);
  const auto labels = dir / "test_labels.tsv";
  corpus.test = load_split(dir / "test.tsv", language, SplitKind::kTest,
                           std::filesystem::exists(labels)
                               ? std::optional<std::filesystem::path>(labels)
                               : std::nullopt);
  try {
    validate_corpus(corpus, /*allow_degenerate=*/true);
  } catch (const ArgumentError& e) {
    throw IngestionError(language.code() + ": " + e.what());
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool starts_with_icase(std::string_view s, std::size_t pos,
                       std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

std::size_t url_prefix_length(std::string_view s, std::size_t pos) {
  for (std::string_view p : {"https://", "http://", "ftp://", "www."}) {
    if (starts_with_icase(s, pos, p)) return p.size();
  }
  return 0;
}

std::string nfc(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(raw);
  const icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  if (normalizer->isNormalized(input, status) && U_SUCCESS(status)) {
    return std::string(raw);
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = normalizer->normalize(input, status);
  if (U_FAILURE(status)) return std::string(raw);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize_text(std::string_view raw) {
  const std::string text = nfc(raw);
  const std::string_view s = text;
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < s.size()) {
    if (ascii_space(s[i])) {
      pending_space = !out.empty();
      ++i;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    const bool word_start = i == 0 || ascii_space(s[i - 1]) ||
                            !std::isalnum(static_cast<unsigned char>(s[i - 1]));
    const std::size_t prefix = word_start ? url_prefix_length(s, i) : 0;
    if (prefix > 0 && i + prefix < s.size() && !ascii_space(s[i + prefix])) {
      while (i < s.size() && !ascii_space(s[i])) ++i;
      out += "URL";
      continue;
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slicing and concatenation

std::size_t slice_size(std::size_t n, double fraction) {
  const double exact = fraction * static_cast<double>(n);
  const auto size = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(size, n);
}

Split slice_fraction(const Split& split, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ArgumentError("fraction must lie in (0, 1], got " +
                        std::to_string(fraction));
  }
  if (split.empty()) throw ArgumentError("cannot slice an empty split");
  if (fraction == 1.0) return split;

  const std::size_t target = slice_size(split.size(), fraction);

  // Per class: a seeded shuffle of its indices, then ceil(f * n_class).
  struct ClassDraw {
    std::vector<std::size_t> picked;
    double quota = 0.0;
  };
  ClassDraw draws[2];
  for (int cls = 1; cls >= 0; --cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < split.size(); ++i) {
      if (static_cast<int>(split[i].label) == cls) members.push_back(i);
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls) + 1));
    shuffle(members, rng);
    const std::size_t take = slice_size(members.size(), fraction);
    members.resize(take);
    draws[cls].picked = std::move(members);
    draws[cls].quota = fraction * static_cast<double>(
        std::count_if(split.begin(), split.end(), [cls](const auto& ex) {
          return static_cast<int>(ex.label) == cls;
        }));
  }

  // Trim the per-class ceilings down to the overall ceiling, each time from
  // the class whose rounding surplus is largest (ties: OFFENSIVE first).
  std::size_t total = draws[0].picked.size() + draws[1].picked.size();
  while (total > target) {
    const double surplus1 = draws[1].picked.size() - draws[1].quota;
    const double surplus0 = draws[0].picked.size() - draws[0].quota;
    ClassDraw& victim =
        (surplus1 >= surplus0 && !draws[1].picked.empty()) ? draws[1] : draws[0];
    victim.picked.pop_back();
    --total;
  }

  std::vector<std::size_t> chosen = draws[1].picked;
  chosen.insert(chosen.end(), draws[0].picked.begin(), draws[0].picked.end());
  std::sort(chosen.begin(), chosen.end());
  Split out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(split[i]);
  return out;
}

Split concatenate_corpora(std::span<const TaggedSplit> splits,
                          std::uint64_t seed) {
  if (splits.empty()) throw ArgumentError("concatenate_corpora: no inputs");
  Split out;
  for (const auto& tagged : splits) {
    for (const auto& ex : tagged.examples) {
      out.push_back(ex);
      out.back().language = tagged.language;
    }
  }
  if (out.empty()) throw ArgumentError("concatenate_corpora: all inputs empty");
  Rng rng(derive_seed(seed, "concatenate"));
  shuffle(out, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Summary

SplitStats split_stats(const Split& split) {
  SplitStats stats;
  stats.size = split.size();
  stats.offensive = static_cast<std::size_t>(
      std::count_if(split.begin(), split.end(), [](const auto& ex) {
        return ex.label == Label::kOffensive;
      }));
  return stats;
}

std::vector<CorpusSummaryRow> corpus_summary(const CorpusCatalog& catalog) {
  if (catalog.empty()) throw ArgumentError("corpus_summary: empty catalog");
  std::vector<CorpusSummaryRow> rows;
  for (const auto& [lang, corpus] : catalog) {
    rows.push_back({lang, split_stats(corpus.train), split_stats(corpus.dev),
                    split_stats(corpus.test)});
  }
  return rows;
}

std::string format_corpus_summary(const std::vector<CorpusSummaryRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %8s %9s %9s %9s\n", "Language",
                "Train", "Dev", "Test", "Train%OFF", "Dev%OFF", "Test%OFF");
  out << buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %8zu %8zu %8zu %9.3f %9.3f %9.3f\n",
                  row.language.display_name().c_str(), row.train.size,
                  row.dev.size, row.test.size, row.train.offensive_share(),
                  row.dev.offensive_share(), row.test.offensive_share());
    out << buf;
  }
  return out.str();
}

}  // namespace xoff
