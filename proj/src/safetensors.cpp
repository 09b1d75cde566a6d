#include "xoff/safetensors.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "xoff/error.hpp"

namespace xoff {

using nlohmann::json;

std::size_t SafetensorsFile::Entry::elements() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

SafetensorsFile SafetensorsFile::open(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError("cannot open weights file " + file.string());
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) {
    throw CheckpointError("truncated weights file " + file.string());
  }
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | len_bytes[i];
  const auto file_size = std::filesystem::file_size(file);
  if (header_len > file_size - 8) {
    throw CheckpointError("corrupt safetensors header in " + file.string());
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  json j;
  try {
    j = json::parse(header);
  } catch (const json::exception& e) {
    throw CheckpointError("corrupt safetensors header in " + file.string() + ": " + e.what());
  }
  SafetensorsFile out;
  out.path_ = file;
  out.data_start_ = 8 + header_len;
  const std::size_t data_size = file_size - out.data_start_;
  for (auto& [name, value] : j.items()) {
    if (name == "__metadata__") {
      for (auto& [k, v] : value.items()) out.metadata_[k] = v.get<std::string>();
      continue;
    }
    Entry e;
    e.dtype = value.at("dtype").get<std::string>();
    e.shape = value.at("shape").get<std::vector<std::size_t>>();
    auto offsets = value.at("data_offsets").get<std::vector<std::size_t>>();
    if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_size) {
      throw CheckpointError("bad offsets for tensor " + name);
    }
    e.begin = offsets[0];
    e.end = offsets[1];
    out.entries_.emplace(name, std::move(e));
  }
  return out;
}

std::vector<Scalar> SafetensorsFile::read(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw CheckpointError("tensor " + name + " not found");
  const Entry& e = it->second;
  std::size_t width = 0;
  if (e.dtype == "F64") width = 8;
  else if (e.dtype == "F32") width = 4;
  else throw CheckpointError("unsupported dtype " + e.dtype + " for " + name);
  const std::size_t n = e.elements();
  if (n * width != e.end - e.begin) {
    throw CheckpointError("size mismatch for tensor " + name);
  }
  std::ifstream in(path_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(data_start_ + e.begin));
  std::vector<char> raw(e.end - e.begin);
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) {
    throw CheckpointError("truncated data for tensor " + name);
  }
  std::vector<Scalar> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (width == 8) {
      double v;
      std::memcpy(&v, raw.data() + 8 * i, 8);
      values[i] = v;
    } else {
      float v;
      std::memcpy(&v, raw.data() + 4 * i, 4);
      values[i] = v;
    }
  }
  return values;
}

void save_parameters(const std::filesystem::path& file,
                     const ParameterLayout& layout,
                     std::span<const Scalar> values,
                     const std::map<std::string, std::string>& metadata) {
  json header = json::object();
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::size_t offset = 0;
  for (const auto& slot : layout.slots()) {
    json shape = slot.is_vector ? json::array({slot.cols})
                                : json::array({slot.rows, slot.cols});
    header[slot.name] = {{"dtype", "F64"},
                         {"shape", shape},
                         {"data_offsets", {offset, offset + 8 * slot.size()}}};
    offset += 8 * slot.size();
  }
  std::string text = header.dump();
  while ((8 + text.size()) % 8 != 0) text.push_back(' ');
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weights file " + file.string());
  std::uint64_t len = text.size();
  unsigned char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(len_bytes), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& slot : layout.slots()) {
    out.write(reinterpret_cast<const char*>(values.data() + slot.offset),
              static_cast<std::streamsize>(8 * slot.size()));
  }
  if (!out) throw IoError("failed writing weights file " + file.string());
}

std::vector<std::string> load_parameters(const SafetensorsFile& file,
                                         const ParameterLayout& layout,
                                         std::span<Scalar> values,
                                         const NameAliases& aliases) {
  std::vector<std::string> missing;
  for (const auto& slot : layout.slots()) {
    std::vector<std::string> candidates =
        aliases ? aliases(slot.name) : std::vector<std::string>{slot.name};
    const std::string* found = nullptr;
    for (const auto& c : candidates) {
      if (file.contains(c)) {
        found = &c;
        break;
      }
    }
    if (!found) {
      missing.push_back(slot.name);
      continue;
    }
    const auto& entry = file.entries().at(*found);
    if (entry.elements() != slot.size()) {
      throw CheckpointError("shape mismatch for " + *found + ": expected " +
                            std::to_string(slot.size()) + " elements, found " +
                            std::to_string(entry.elements()));
    }
    auto data = file.read(*found);
    std::copy(data.begin(), data.end(), values.begin() + static_cast<std::ptrdiff_t>(slot.offset));
  }
  return missing;
}

}  // namespace xoff
