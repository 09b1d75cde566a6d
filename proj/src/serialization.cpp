#include "xoff/serialization.hpp"

namespace xoff {

ObjectReader::ObjectReader(const Json& object, std::string path)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) throw ConfigError(path_, "expected an object");
}

bool ObjectReader::has(std::string_view key) const {
  return object_.contains(std::string(key));
}

std::string ObjectReader::child_path(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

const Json& ObjectReader::raw(std::string_view key) {
  seen_.insert(std::string(key));
  return object_.at(std::string(key));
}

namespace {

[[noreturn]] void type_error(const std::string& path, std::string_view expected) {
  throw ConfigError(path, "expected " + std::string(expected));
}

}  // namespace

void ObjectReader::read(std::string_view key, int& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_number_integer()) type_error(child_path(key), "an integer");
  const auto value = v.get<std::int64_t>();
  if (value < INT32_MIN || value > INT32_MAX) type_error(child_path(key), "a 32-bit integer");
  out = static_cast<int>(value);
}

void ObjectReader::read(std::string_view key, std::uint64_t& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    type_error(child_path(key), "a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

void ObjectReader::read(std::string_view key, double& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_number()) type_error(child_path(key), "a number");
  out = v.get<double>();
}

void ObjectReader::read(std::string_view key, bool& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_boolean()) type_error(child_path(key), "a boolean");
  out = v.get<bool>();
}

void ObjectReader::read(std::string_view key, std::string& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_string()) type_error(child_path(key), "a string");
  out = v.get<std::string>();
}

void ObjectReader::read(std::string_view key, std::vector<double>& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_array()) type_error(child_path(key), "an array of numbers");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_number()) type_error(child_path(key), "an array of numbers");
    out.push_back(e.get<double>());
  }
}

void ObjectReader::read(std::string_view key, std::vector<std::string>& out) {
  if (!has(key)) return;
  const Json& v = raw(key);
  if (!v.is_array()) type_error(child_path(key), "an array of strings");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_string()) type_error(child_path(key), "an array of strings");
    out.push_back(e.get<std::string>());
  }
}

void ObjectReader::finish() const {
  for (const auto& [key, _] : object_.items()) {
    if (!seen_.contains(key)) throw ConfigError(child_path(key), "unknown key");
  }
}

Json to_json(const ModelConfig& c) {
  return {{"architecture", architecture_name(c.architecture)},
          {"encoder_id", c.encoder_id},
          {"num_blocks", c.num_blocks},
          {"num_attention_heads", c.num_attention_heads},
          {"hidden_size", c.hidden_size},
          {"intermediate_size", c.intermediate_size},
          {"head_dropout", c.head_dropout},
          {"max_sequence_length", c.max_sequence_length},
          {"max_position_embeddings", c.max_position_embeddings},
          {"type_vocab_size", c.type_vocab_size},
          {"lowercase", c.lowercase},
          {"embedding_dim", c.embedding_dim},
          {"lstm_hidden_dim", c.lstm_hidden_dim}};
}

ModelConfig model_config_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  std::string preset = "reference";
  r.read("preset", preset);
  ModelConfig c;
  if (preset == "desk") {
    c = ModelConfig::desk();
  } else if (preset == "baseline") {
    c = ModelConfig::baseline();
  } else if (preset != "reference") {
    throw ConfigError(r.child_path("preset"),
                      "expected \"reference\", \"desk\" or \"baseline\"");
  }
  std::string architecture(architecture_name(c.architecture));
  r.read("architecture", architecture);
  try {
    c.architecture = parse_architecture(architecture);
  } catch (const ArgumentError&) {
    throw ConfigError(r.child_path("architecture"),
                      "expected \"transformer\" or \"bilstm\"");
  }
  r.read("encoder_id", c.encoder_id);
  r.read("num_blocks", c.num_blocks);
  r.read("num_attention_heads", c.num_attention_heads);
  r.read("hidden_size", c.hidden_size);
  r.read("intermediate_size", c.intermediate_size);
  r.read("head_dropout", c.head_dropout);
  r.read("max_sequence_length", c.max_sequence_length);
  r.read("max_position_embeddings", c.max_position_embeddings);
  r.read("type_vocab_size", c.type_vocab_size);
  r.read("lowercase", c.lowercase);
  r.read("embedding_dim", c.embedding_dim);
  r.read("lstm_hidden_dim", c.lstm_hidden_dim);
  r.finish();
  return c;
}

Json to_json(const TrainingConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"peak_learning_rate", c.peak_learning_rate},
          {"warmup_fraction", c.warmup_fraction},
          {"loss", c.loss},
          {"optimizer", c.optimizer},
          {"adam",
           {{"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon},
            {"weight_decay", c.adam.weight_decay}}},
          {"seed", c.seed},
          {"decision_threshold", c.decision_threshold}};
}

TrainingConfig training_config_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  std::string preset = "reference";
  r.read("preset", preset);
  TrainingConfig c;
  if (preset == "desk") {
    c = TrainingConfig::desk();
  } else if (preset != "reference") {
    throw ConfigError(r.child_path("preset"), "expected \"reference\" or \"desk\"");
  }
  r.read("epochs", c.epochs);
  r.read("batch_size", c.batch_size);
  r.read("peak_learning_rate", c.peak_learning_rate);
  r.read("warmup_fraction", c.warmup_fraction);
  r.read("loss", c.loss);
  r.read("optimizer", c.optimizer);
  if (r.has("adam")) {
    ObjectReader a(r.raw("adam"), r.child_path("adam"));
    a.read("beta1", c.adam.beta1);
    a.read("beta2", c.adam.beta2);
    a.read("epsilon", c.adam.epsilon);
    a.read("weight_decay", c.adam.weight_decay);
    a.finish();
  }
  r.read("seed", c.seed);
  r.read("decision_threshold", c.decision_threshold);
  r.finish();
  if (c.loss != "binary_cross_entropy") {
    throw ConfigError(r.child_path("loss"), "expected \"binary_cross_entropy\"");
  }
  if (c.optimizer != "adam") {
    throw ConfigError(r.child_path("optimizer"), "expected \"adam\"");
  }
  return c;
}

Json to_json(const MetricsReport& m) {
  return {{"macro_f1", m.macro_f1},
          {"f1_offensive", m.f1_offensive},
          {"f1_not_offensive", m.f1_not_offensive},
          {"confusion",
           {{"tp", m.confusion.tp},
            {"fp", m.confusion.fp},
            {"fn", m.confusion.fn},
            {"tn", m.confusion.tn}}},
          {"n", m.n}};
}

MetricsReport metrics_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  MetricsReport m;
  r.require("macro_f1", m.macro_f1);
  r.require("f1_offensive", m.f1_offensive);
  r.require("f1_not_offensive", m.f1_not_offensive);
  r.require("n", m.n);
  if (!r.has("confusion")) throw ConfigError(r.child_path("confusion"), "required key is missing");
  ObjectReader c(r.raw("confusion"), r.child_path("confusion"));
  c.require("tp", m.confusion.tp);
  c.require("fp", m.confusion.fp);
  c.require("fn", m.confusion.fn);
  c.require("tn", m.confusion.tn);
  c.finish();
  r.finish();
  return m;
}

}  // namespace xoff
