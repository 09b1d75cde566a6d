#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xoff/classifier.hpp"
#include "xoff/error.hpp"
#include "xoff/metrics.hpp"

namespace xoff {

using Json = nlohmann::json;

// Strict reader over one JSON object: every key read is type-checked, and
// finish() rejects keys that were never read. Errors name the full key path.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string path);

  bool has(std::string_view key) const;
  const Json& raw(std::string_view key);
  std::string child_path(std::string_view key) const;

  void read(std::string_view key, int& out);
  void read(std::string_view key, std::uint64_t& out);
  void read(std::string_view key, double& out);
  void read(std::string_view key, bool& out);
  void read(std::string_view key, std::string& out);
  void read(std::string_view key, std::vector<double>& out);
  void read(std::string_view key, std::vector<std::string>& out);

  template <typename T>
  void require(std::string_view key, T& out) {
    if (!has(key)) throw ConfigError(child_path(key), "required key is missing");
    read(key, out);
  }

  void finish() const;

 private:
  const Json& object_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

Json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j, const std::string& path = "model");

Json to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const Json& j,
                                         const std::string& path = "training");

Json to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const Json& j, const std::string& path = "metrics");

}  // namespace xoff
