#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xoff/parameters.hpp"

namespace xoff {

// Minimal safetensors support: an 8-byte little-endian header length, a JSON
// header mapping tensor names to {dtype, shape, data_offsets}, then raw data.
// F32 and F64 are read; F64 is written.
class SafetensorsFile {
 public:
  struct Entry {
    std::string dtype;
    std::vector<std::size_t> shape;
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t elements() const;
  };

  static SafetensorsFile open(const std::filesystem::path& file);

  bool contains(const std::string& name) const { return entries_.contains(name); }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  std::vector<Scalar> read(const std::string& name) const;

 private:
  std::filesystem::path path_;
  std::size_t data_start_ = 0;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> metadata_;
};

void save_parameters(const std::filesystem::path& file,
                     const ParameterLayout& layout,
                     std::span<const Scalar> values,
                     const std::map<std::string, std::string>& metadata = {});

// Maps a layout name to the candidate names tried in the file, in order.
using NameAliases = std::function<std::vector<std::string>(const std::string&)>;

// Fills every slot found in the file. Returns the names of slots that were
// not present (left untouched). Shape mismatches throw CheckpointError.
std::vector<std::string> load_parameters(const SafetensorsFile& file,
                                         const ParameterLayout& layout,
                                         std::span<Scalar> values,
                                         const NameAliases& aliases = {});

}  // namespace xoff
