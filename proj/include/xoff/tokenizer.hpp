#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xoff/corpus.hpp"

namespace xoff {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";

class Vocabulary {
 public:
  Vocabulary() = default;
  // Tokens in id order. Must contain the [PAD] [UNK] [CLS] [SEP] specials.
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary from_file(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  std::optional<int> find(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_ = 0, unk_ = 1, cls_ = 2, sep_ = 3;
};

// Whitespace/punctuation pre-tokenization over Unicode code points.
std::vector<std::string> basic_tokenize(std::string_view text, bool lowercase);

// Specials first, then every pre-token of the given splits in sorted order.
Vocabulary build_vocabulary(std::span<const Split* const> splits,
                            bool lowercase = false);

struct TokenizerOptions {
  bool lowercase = false;
  bool add_boundary_tokens = true;  // [CLS] ... [SEP]
  std::size_t max_length = 128;     // including boundary tokens
};

struct Encoding {
  std::vector<int> ids;
  std::vector<std::string> pieces;
  // Index into `words` for each piece; -1 for boundary tokens.
  std::vector<int> word_index;
  std::vector<std::string> words;
};

// Greedy longest-match-first WordPiece with "##" continuations.
class Tokenizer {
 public:
  Tokenizer(Vocabulary vocabulary, TokenizerOptions options);

  Encoding encode(std::string_view text) const;
  std::vector<int> ids(std::string_view text) const { return encode(text).ids; }

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const TokenizerOptions& options() const { return options_; }

 private:
  void wordpiece(const std::string& word, std::vector<int>& ids,
                 std::vector<std::string>& pieces) const;

  Vocabulary vocabulary_;
  TokenizerOptions options_;
};

}  // namespace xoff
