#include "xoff/language.hpp"

#include <cctype>

#include "xoff/error.hpp"

namespace xoff {

Language Language::parse(std::string_view code) {
  for (const auto& lang : shared_task_languages()) {
    if (lang.code() == code) return lang;
  }
  constexpr std::string_view kPrefix = "syn_";
  if (code.starts_with(kPrefix)) return synthetic(code.substr(kPrefix.size()));
  throw ArgumentError("unknown language code '" + std::string(code) + "'");
}

Language Language::synthetic(std::string_view name) {
  if (name.empty()) throw ArgumentError("synthetic language needs a name");
  for (char c : name) {
    if (!std::islower(static_cast<unsigned char>(c)) &&
        !std::isdigit(static_cast<unsigned char>(c))) {
      throw ArgumentError("synthetic language name must be [a-z0-9]+, got '" +
                          std::string(name) + "'");
    }
  }
  return Language("syn_" + std::string(name), kSyntheticRank);
}

const std::vector<Language>& Language::shared_task_languages() {
  static const std::vector<Language> all = {english(), danish(), greek(),
                                            arabic(), turkish()};
  return all;
}

std::string Language::display_name() const {
  switch (rank_) {
    case 0: return "English";
    case 1: return "Danish";
    case 2: return "Greek";
    case 3: return "Arabic";
    case 4: return "Turkish";
    default: break;
  }
  std::string name = "Synthetic-" + code_.substr(4);
  for (std::size_t i = 10; i < name.size(); ++i) {
    name[i] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[i])));
  }
  return name;
}

std::string join_codes(const std::vector<Language>& languages,
                       std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < languages.size(); ++i) {
    if (i) out += separator;
    out += languages[i].code();
  }
  return out;
}

}  // namespace xoff
