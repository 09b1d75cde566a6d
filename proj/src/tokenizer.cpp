#include "xoff/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "xoff/error.hpp"

namespace xoff {

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
  auto require = [&](std::string_view special) {
    auto id = find(special);
    if (!id) {
      throw ArgumentError("vocabulary lacks special token " + std::string(special));
    }
    return *id;
  };
  pad_ = require(kPadToken);
  unk_ = require(kUnkToken);
  cls_ = require(kClsToken);
  sep_ = require(kSepToken);
}

Vocabulary Vocabulary::from_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read vocabulary " + file.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + file.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

bool is_punctuation(UChar32 c) {
  if ((c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
      (c >= 123 && c <= 126)) {
    return true;
  }
  return u_ispunct(c);
}

bool is_cjk(UChar32 c) {
  return (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x20000 && c <= 0x2A6DF) || (c >= 0x2A700 && c <= 0x2B73F) ||
         (c >= 0x2B740 && c <= 0x2B81F) || (c >= 0x2B820 && c <= 0x2CEAF) ||
         (c >= 0xF900 && c <= 0xFAFF) || (c >= 0x2F800 && c <= 0x2FA1F);
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[4];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, 4, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::vector<std::string> basic_tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0 || c == 0xFFFD || (u_iscntrl(c) && c != '\t' && c != '\n' && c != '\r')) {
      continue;
    }
    if (u_isUWhiteSpace(c)) {
      flush();
      continue;
    }
    if (is_punctuation(c) || is_cjk(c)) {
      flush();
      std::string single;
      append_utf8(single, c);
      tokens.push_back(std::move(single));
      continue;
    }
    append_utf8(current, lowercase ? u_tolower(c) : c);
  }
  flush();
  return tokens;
}

Vocabulary build_vocabulary(std::span<const Split* const> splits,
                            bool lowercase) {
  std::set<std::string> words;
  for (const Split* split : splits) {
    if (split == nullptr) continue;
    for (const auto& ex : *split) {
      for (auto& w : basic_tokenize(ex.text, lowercase)) words.insert(std::move(w));
    }
  }
  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnkToken),
                                     std::string(kClsToken), std::string(kSepToken),
                                     std::string(kMaskToken)};
  for (const auto& w : words) {
    if (w != kPadToken && w != kUnkToken && w != kClsToken && w != kSepToken &&
        w != kMaskToken) {
      tokens.push_back(w);
    }
  }
  return Vocabulary(std::move(tokens));
}

Tokenizer::Tokenizer(Vocabulary vocabulary, TokenizerOptions options)
    : vocabulary_(std::move(vocabulary)), options_(options) {
  const std::size_t reserved = options_.add_boundary_tokens ? 2 : 0;
  if (options_.max_length < reserved + 1) {
    throw ArgumentError("tokenizer max_length too small");
  }
}

void Tokenizer::wordpiece(const std::string& word, std::vector<int>& ids,
                          std::vector<std::string>& pieces) const {
  constexpr std::size_t kMaxWordBytes = 200;
  if (auto whole = vocabulary_.find(word)) {
    ids.push_back(*whole);
    pieces.push_back(word);
    return;
  }
  if (word.size() > kMaxWordBytes) {
    ids.push_back(vocabulary_.unk_id());
    pieces.emplace_back(kUnkToken);
    return;
  }
  std::vector<int> local_ids;
  std::vector<std::string> local_pieces;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    std::optional<int> match;
    std::string candidate;
    while (start < end) {
      candidate = (start > 0 ? "##" : "") + word.substr(start, end - start);
      match = vocabulary_.find(candidate);
      if (match) break;
      // Step back one whole code point.
      --end;
      while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80) --end;
    }
    if (!match) {
      ids.push_back(vocabulary_.unk_id());
      pieces.emplace_back(kUnkToken);
      return;
    }
    local_ids.push_back(*match);
    local_pieces.push_back(candidate);
    start = end;
  }
  ids.insert(ids.end(), local_ids.begin(), local_ids.end());
  pieces.insert(pieces.end(), local_pieces.begin(), local_pieces.end());
}

Encoding Tokenizer::encode(std::string_view text) const {
  Encoding enc;
  const std::size_t budget =
      options_.max_length - (options_.add_boundary_tokens ? 2 : 0);
  if (options_.add_boundary_tokens) {
    enc.ids.push_back(vocabulary_.cls_id());
    enc.pieces.emplace_back(kClsToken);
    enc.word_index.push_back(-1);
  }
  std::size_t used = 0;
  for (auto& word : basic_tokenize(text, options_.lowercase)) {
    if (used >= budget) break;
    std::vector<int> ids;
    std::vector<std::string> pieces;
    wordpiece(word, ids, pieces);
    const std::size_t keep = std::min(ids.size(), budget - used);
    const int index = static_cast<int>(enc.words.size());
    enc.words.push_back(std::move(word));
    for (std::size_t k = 0; k < keep; ++k) {
      enc.ids.push_back(ids[k]);
      enc.pieces.push_back(std::move(pieces[k]));
      enc.word_index.push_back(index);
    }
    used += keep;
  }
  if (!options_.add_boundary_tokens && enc.ids.empty()) {
    // Sequence models need at least one step.
    enc.ids.push_back(vocabulary_.unk_id());
    enc.pieces.emplace_back(kUnkToken);
    enc.word_index.push_back(-1);
  }
  if (options_.add_boundary_tokens) {
    enc.ids.push_back(vocabulary_.sep_id());
    enc.pieces.emplace_back(kSepToken);
    enc.word_index.push_back(-1);
  }
  return enc;
}

}  // namespace xoff
