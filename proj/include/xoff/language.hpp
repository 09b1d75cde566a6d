#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace xoff {

// A corpus language. The five shared-task languages come first in a fixed
// order (en, da, el, ar, tr); synthetic desk-scale languages ("syn_<name>")
// follow, ordered by name.
class Language {
 public:
  static Language parse(std::string_view code);
  static Language synthetic(std::string_view name);

  static Language english() { return Language("en", 0); }
  static Language danish() { return Language("da", 1); }
  static Language greek() { return Language("el", 2); }
  static Language arabic() { return Language("ar", 3); }
  static Language turkish() { return Language("tr", 4); }

  static const std::vector<Language>& shared_task_languages();

  const std::string& code() const { return code_; }
  bool is_synthetic() const { return rank_ == kSyntheticRank; }
  std::string display_name() const;

  friend bool operator==(const Language&, const Language&) = default;
  friend std::strong_ordering operator<=>(const Language& a,
                                          const Language& b) {
    if (auto c = a.rank_ <=> b.rank_; c != 0) return c;
    return a.code_.compare(b.code_) <=> 0;
  }

 private:
  static constexpr int kSyntheticRank = 5;

  Language(std::string code, int rank) : code_(std::move(code)), rank_(rank) {}

  std::string code_;
  int rank_;
};

std::string join_codes(const std::vector<Language>& languages,
                       std::string_view separator = "+");

}  // namespace xoff
