#pragma once

#include <regex>
#include <sstream>
#include <string>

// Regex reference for URL replacement and whitespace collapse on ASCII input.
namespace oracle {

inline std::string normalize_ascii(const std::string& raw) {
  static const std::regex url(R"((^|[^A-Za-z0-9])((https?://|ftp://|www\.)\S+))",
                              std::regex::icase);
  std::istringstream words(raw);
  std::string word, out;
  while (words >> word) {
    word = std::regex_replace(word, url, "$1URL");
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

}  // namespace oracle
