#include "xoff/synthetic.hpp"

#include "xoff/error.hpp"
#include "xoff/random.hpp"

namespace xoff {

namespace {

std::string stem(const Language& language) {
  return language.is_synthetic() ? language.code().substr(4) : language.code();
}

Split make_split(const Language& language, SplitKind kind, std::size_t count,
                 const SyntheticOptions& opt, const Language& lexicon_owner,
                 Rng& rng) {
  Split out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const bool offensive = (i % 2) == 0;
    const std::size_t length =
        opt.min_length + rng.below(opt.max_length - opt.min_length + 1);
    std::vector<std::string> words;
    for (std::size_t w = 0; w < length; ++w) {
      words.push_back(
          synthetic_neutral_word(language, rng.below(opt.neutral_vocabulary)));
    }
    // Replace rather than insert so both classes share one length law.
    if (offensive) {
      words[rng.below(length)] =
          synthetic_lexicon_word(lexicon_owner, rng.below(opt.lexicon_size));
    }
    std::string text;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (w) text += ' ';
      text += words[w];
    }
    out.push_back({language.code() + "-" + std::string(split_name(kind)) + "-" +
                       std::to_string(i),
                   std::move(text),
                   offensive ? Label::kOffensive : Label::kNotOffensive,
                   language});
  }
  shuffle(out, rng);
  return out;
}

}  // namespace

std::string synthetic_lexicon_word(const Language& language, std::size_t i) {
  return stem(language) + "x" + std::to_string(i);
}

std::string synthetic_neutral_word(const Language& language, std::size_t i) {
  return stem(language) + "w" + std::to_string(i);
}

LanguageCorpus make_synthetic_corpus(const Language& language,
                                     const SyntheticOptions& options) {
  if (options.neutral_vocabulary == 0 || options.lexicon_size == 0 ||
      options.min_length == 0 || options.max_length < options.min_length) {
    throw ArgumentError("invalid synthetic corpus options");
  }
  if (options.train_size < 2 || options.test_size < 2 ||
      (options.dev_size == 1)) {
    throw ArgumentError("synthetic splits need at least two examples");
  }
  const Language owner = options.lexicon_from.value_or(language);
  Rng rng(derive_seed(options.seed, language.code()));
  LanguageCorpus corpus;
  corpus.language = language;
  corpus.train = make_split(language, SplitKind::kTrain, options.train_size,
                            options, owner, rng);
  corpus.dev = make_split(language, SplitKind::kDev, options.dev_size, options,
                          owner, rng);
  corpus.test = make_split(language, SplitKind::kTest, options.test_size,
                           options, owner, rng);
  return corpus;
}

}  // namespace xoff
