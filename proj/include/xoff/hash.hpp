#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace xoff {

// 64-bit FNV-1a, used for content identities (spec hashes, data hashes).
class ContentHash {
 public:
  ContentHash& update(std::string_view bytes) {
    for (unsigned char c : bytes) state_ = (state_ ^ c) * 0x100000001B3ULL;
    // Length-delimit so ("ab","c") and ("a","bc") differ.
    return update_raw(bytes.size());
  }

  ContentHash& update(std::uint64_t value) { return update_raw(value); }

  std::uint64_t value() const { return state_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  ContentHash& update_raw(std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
      state_ = (state_ ^ ((value >> (8 * i)) & 0xFF)) * 0x100000001B3ULL;
    }
    return *this;
  }

  std::uint64_t state_ = 0xCBF29CE484222325ULL;
};

}  // namespace xoff
