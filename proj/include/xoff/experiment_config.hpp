#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xoff/protocols.hpp"
#include "xoff/serialization.hpp"

namespace xoff {

// 0.05, 0.10, ..., 1.00 computed as k/20 so the last value is exactly 1.
std::vector<double> default_fraction_grid();

Json spec_to_json(const ExperimentSpec& spec);
// Strict: unknown keys and wrong types throw ConfigError naming the key.
// Fields the kind leaves implicit are filled in before validation.
ExperimentSpec spec_from_json(const Json& document);

std::string serialize_experiment_spec(const ExperimentSpec& spec);

// `assignment` is "dotted.key=value". The value is read as JSON when it
// parses as JSON and as a bare string otherwise.
void apply_override(Json& document, std::string_view assignment);

ExperimentSpec parse_experiment_text(std::string_view text,
                                     std::span<const std::string> overrides = {});
ExperimentSpec parse_experiment_config(const std::filesystem::path& path,
                                       std::span<const std::string> overrides = {});

}  // namespace xoff
