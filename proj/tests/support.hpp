#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "xoff/classifier.hpp"
#include "xoff/corpus.hpp"
#include "xoff/synthetic.hpp"

namespace testing_support {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("xoff-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline xoff::SyntheticOptions desk_sizes(std::size_t train = 128, std::size_t dev = 32,
                                         std::size_t test = 128, std::uint64_t seed = 1) {
  xoff::SyntheticOptions o;
  o.train_size = train;
  o.dev_size = dev;
  o.test_size = test;
  o.seed = seed;
  return o;
}

// Two synthetic languages with disjoint vocabularies and lexicons.
inline xoff::CorpusCatalog disjoint_pair(const xoff::SyntheticOptions& o = desk_sizes()) {
  xoff::CorpusCatalog c;
  c.add(xoff::make_synthetic_corpus(xoff::Language::synthetic("a"), o));
  c.add(xoff::make_synthetic_corpus(xoff::Language::synthetic("b"), o));
  return c;
}

inline xoff::Vocabulary vocabulary_of(const xoff::Split& split) {
  const xoff::Split* splits[] = {&split};
  return xoff::build_vocabulary(splits);
}

}  // namespace testing_support
