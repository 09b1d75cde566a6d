#include "xoff/experiment_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "xoff/error.hpp"

namespace xoff {

std::vector<double> default_fraction_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(static_cast<double>(k) / 20.0);
  return grid;
}

namespace {

Json codes(const std::vector<Language>& languages) {
  Json out = Json::array();
  for (const auto& l : languages) out.push_back(l.code());
  return out;
}

std::string_view format_name(DataSource::Format f) {
  return f == DataSource::Format::kOlidTsv ? "olid_tsv" : "synthetic";
}

Json data_to_json(const DataSource& d) {
  const auto& s = d.synthetic;
  Json synthetic = {{"train_size", s.train_size},
                    {"dev_size", s.dev_size},
                    {"test_size", s.test_size},
                    {"neutral_vocabulary", s.neutral_vocabulary},
                    {"lexicon_size", s.lexicon_size},
                    {"min_length", s.min_length},
                    {"max_length", s.max_length},
                    {"seed", s.seed}};
  Json shared = Json::object();
  for (const auto& [lang, from] : d.shared_lexicons) shared[lang.code()] = from.code();
  return {{"format", format_name(d.format)},
          {"root", d.root.generic_string()},
          {"synthetic", synthetic},
          {"shared_lexicons", shared}};
}

Language read_language(const Json& value, const std::string& path) {
  if (!value.is_string()) throw ConfigError(path, "expected a language code string");
  try {
    return Language::parse(value.get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<Language> read_languages(ObjectReader& r, std::string_view key) {
  std::vector<Language> out;
  if (!r.has(key)) return out;
  const Json& v = r.raw(key);
  const std::string path = r.child_path(key);
  if (!v.is_array()) throw ConfigError(path, "expected an array of language codes");
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(read_language(v[i], path + "[" + std::to_string(i) + "]"));
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw ConfigError(path, "lists a language twice");
  }
  return out;
}

std::size_t read_count(ObjectReader& r, std::string_view key, std::size_t fallback) {
  std::uint64_t v = fallback;
  r.read(key, v);
  return static_cast<std::size_t>(v);
}

DataSource data_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  DataSource d;
  std::string format(format_name(d.format));
  r.read("format", format);
  if (format == "olid_tsv") {
    d.format = DataSource::Format::kOlidTsv;
  } else if (format == "synthetic") {
    d.format = DataSource::Format::kSynthetic;
  } else {
    throw ConfigError(r.child_path("format"), "expected \"olid_tsv\" or \"synthetic\"");
  }
  std::string root = d.root.generic_string();
  r.read("root", root);
  d.root = root;
  if (r.has("synthetic")) {
    ObjectReader s(r.raw("synthetic"), r.child_path("synthetic"));
    auto& o = d.synthetic;
    o.train_size = read_count(s, "train_size", o.train_size);
    o.dev_size = read_count(s, "dev_size", o.dev_size);
    o.test_size = read_count(s, "test_size", o.test_size);
    o.neutral_vocabulary = read_count(s, "neutral_vocabulary", o.neutral_vocabulary);
    o.lexicon_size = read_count(s, "lexicon_size", o.lexicon_size);
    o.min_length = read_count(s, "min_length", o.min_length);
    o.max_length = read_count(s, "max_length", o.max_length);
    s.read("seed", o.seed);
    s.finish();
  }
  if (r.has("shared_lexicons")) {
    const Json& m = r.raw("shared_lexicons");
    const std::string mpath = r.child_path("shared_lexicons");
    if (!m.is_object()) throw ConfigError(mpath, "expected an object of language codes");
    for (const auto& [key, value] : m.items()) {
      const Language lang = read_language(Json(key), mpath + "." + key);
      d.shared_lexicons.emplace(lang, read_language(value, mpath + "." + key));
    }
  }
  r.finish();
  return d;
}

}  // namespace

Json spec_to_json(const ExperimentSpec& spec) {
  Json j = {{"kind", experiment_kind_name(spec.kind)},
            {"train_languages", codes(spec.train_languages)},
            {"test_languages", codes(spec.test_languages)},
            {"model", to_json(spec.model)},
            {"training", to_json(spec.training)},
            {"output_dir", spec.output_dir.generic_string()},
            {"data", data_to_json(spec.data)}};
  if (spec.fractions) j["fractions"] = *spec.fractions;
  if (spec.augment_base) j["augment_base"] = spec.augment_base->code();
  if (spec.augment_with) j["augment_with"] = spec.augment_with->code();
  return j;
}

ExperimentSpec spec_from_json(const Json& document) {
  if (!document.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ObjectReader r(document, "");
  ExperimentSpec spec;

  std::string kind;
  r.require("kind", kind);
  const auto parsed = parse_experiment_kind(kind);
  if (!parsed) {
    throw ConfigError("kind",
                      "expected one of monolingual, joint_all, zero_shot_matrix, "
                      "few_shot_curve, augmentation");
  }
  spec.kind = *parsed;
  spec.train_languages = read_languages(r, "train_languages");
  spec.test_languages = read_languages(r, "test_languages");
  if (r.has("fractions")) {
    std::vector<double> f;
    r.read("fractions", f);
    spec.fractions = std::move(f);
  }
  if (r.has("augment_base")) spec.augment_base = read_language(r.raw("augment_base"), "augment_base");
  if (r.has("augment_with")) spec.augment_with = read_language(r.raw("augment_with"), "augment_with");
  if (r.has("model")) spec.model = model_config_from_json(r.raw("model"), "model");
  if (r.has("training")) spec.training = training_config_from_json(r.raw("training"), "training");
  std::string output_dir = spec.output_dir.generic_string();
  r.read("output_dir", output_dir);
  spec.output_dir = output_dir;
  if (r.has("data")) spec.data = data_from_json(r.raw("data"), "data");
  r.finish();

  // Implicit fields.
  const bool sliced = spec.kind == ExperimentKind::kFewShotCurve ||
                      spec.kind == ExperimentKind::kAugmentation;
  if (spec.kind == ExperimentKind::kFewShotCurve && !spec.fractions) {
    spec.fractions = default_fraction_grid();
  }
  if (sliced && spec.augment_base) {
    if (spec.train_languages.empty()) {
      spec.train_languages.push_back(*spec.augment_base);
      if (spec.augment_with && *spec.augment_with != *spec.augment_base) {
        spec.train_languages.push_back(*spec.augment_with);
      }
      std::sort(spec.train_languages.begin(), spec.train_languages.end());
    }
    if (spec.test_languages.empty()) spec.test_languages = {*spec.augment_base};
  }
  if (!sliced && spec.test_languages.empty()) spec.test_languages = spec.train_languages;

  spec.validate();
  return spec;
}

std::string serialize_experiment_spec(const ExperimentSpec& spec) {
  return spec_to_json(spec).dump(2) + "\n";
}

void apply_override(Json& document, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "override must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError(key, "empty component in override key");
    if (!node->is_object()) {
      throw ConfigError(key, "override descends into a value that is not an object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

ExperimentSpec parse_experiment_text(std::string_view text,
                                     std::span<const std::string> overrides) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("<root>", "not valid JSON");
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  return spec_from_json(doc);
}

ExperimentSpec parse_experiment_config(const std::filesystem::path& path,
                                       std::span<const std::string> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_text(text.str(), overrides);
}

}  // namespace xoff
