#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "xoff/corpus.hpp"

namespace xoff {

// Desk-scale corpora whose label is a lexical rule: an example is OFFENSIVE
// exactly when it contains a word from its language's offensive lexicon.
// Neutral vocabularies of different synthetic languages never overlap, and
// neither do lexicons unless `lexicon_from` names another language.
struct SyntheticOptions {
  std::size_t train_size = 32;
  std::size_t dev_size = 16;
  std::size_t test_size = 64;
  std::size_t neutral_vocabulary = 40;
  std::size_t lexicon_size = 6;
  std::size_t min_length = 4;
  std::size_t max_length = 9;
  std::uint64_t seed = 1;
  // Borrow the offensive lexicon of this language instead of a private one.
  std::optional<Language> lexicon_from;

  friend bool operator==(const SyntheticOptions&, const SyntheticOptions&) = default;
};

LanguageCorpus make_synthetic_corpus(const Language& language,
                                     const SyntheticOptions& options);

// The i-th lexicon word of a synthetic language, e.g. "syn_a" -> "ax3".
std::string synthetic_lexicon_word(const Language& language, std::size_t i);
std::string synthetic_neutral_word(const Language& language, std::size_t i);

}  // namespace xoff
