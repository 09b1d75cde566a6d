#include "xoff/classifier.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include <omp.h>

#include "xoff/bilstm.hpp"
#include "xoff/error.hpp"
#include "xoff/hash.hpp"
#include "xoff/metrics.hpp"
#include "xoff/random.hpp"
#include "xoff/safetensors.hpp"
#include "xoff/serialization.hpp"
#include "xoff/transformer.hpp"

namespace xoff {

std::string_view architecture_name(Architecture a) {
  return a == Architecture::kTransformer ? "transformer" : "bilstm";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "transformer") return Architecture::kTransformer;
  if (name == "bilstm") return Architecture::kBiLstm;
  throw ArgumentError("unknown architecture '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (max_sequence_length < 2) {
    throw ArgumentError("max_sequence_length must be at least 2");
  }
  if (!(head_dropout >= 0.0 && head_dropout < 1.0)) {
    throw ArgumentError("head_dropout must lie in [0, 1)");
  }
  if (architecture == Architecture::kBiLstm) {
    if (embedding_dim < 1 || lstm_hidden_dim < 1) {
      throw ArgumentError("baseline dimensions must be positive");
    }
    return;
  }
  if (num_blocks < 1 || num_attention_heads < 1 || hidden_size < 1 ||
      intermediate_size < 1 || type_vocab_size < 1) {
    throw ArgumentError("encoder dimensions must be positive");
  }
  if (hidden_size % num_attention_heads != 0) {
    throw ArgumentError("hidden_size " + std::to_string(hidden_size) +
                        " is not divisible by num_attention_heads " +
                        std::to_string(num_attention_heads));
  }
  if (max_sequence_length > max_position_embeddings) {
    throw ArgumentError("max_sequence_length exceeds max_position_embeddings");
  }
}

ModelConfig ModelConfig::reference() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.encoder_id = std::string(kRandomInitEncoder);
  c.num_blocks = 2;
  c.num_attention_heads = 2;
  c.hidden_size = 32;
  c.intermediate_size = 64;
  c.max_sequence_length = 64;
  c.max_position_embeddings = 64;
  return c;
}

ModelConfig ModelConfig::baseline() {
  ModelConfig c;
  c.architecture = Architecture::kBiLstm;
  c.encoder_id = std::string(kRandomInitEncoder);
  return c;
}

void TrainingConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be at least 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  if (!(peak_learning_rate > 0.0)) throw ArgumentError("peak_learning_rate must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) {
    throw ArgumentError("warmup_fraction must lie in [0, 1)");
  }
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ArgumentError("decision_threshold must lie in (0, 1)");
  }
  if (loss != "binary_cross_entropy") throw ArgumentError("unsupported loss " + loss);
  if (optimizer != "adam") throw ArgumentError("unsupported optimizer " + optimizer);
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0) || adam.weight_decay < 0.0) {
    throw ArgumentError("invalid Adam settings");
  }
}

TrainingConfig TrainingConfig::desk() {
  TrainingConfig c;
  c.epochs = 20;
  c.batch_size = 16;
  c.peak_learning_rate = 5e-4;
  return c;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

EncoderShape encoder_shape(const ModelConfig& c, std::size_t vocab_size,
                           std::size_t pad_id) {
  EncoderShape s;
  s.vocab_size = vocab_size;
  s.hidden = static_cast<std::size_t>(c.hidden_size);
  s.heads = static_cast<std::size_t>(c.num_attention_heads);
  s.blocks = static_cast<std::size_t>(c.num_blocks);
  s.intermediate = static_cast<std::size_t>(c.intermediate_size);
  s.max_positions = static_cast<std::size_t>(c.max_position_embeddings);
  s.type_vocab = static_cast<std::size_t>(c.type_vocab_size);
  s.pad_id = pad_id;
  s.dropout = c.head_dropout;
  return s;
}

TokenizerOptions tokenizer_options(const ModelConfig& c) {
  TokenizerOptions o;
  o.lowercase = c.lowercase;
  o.add_boundary_tokens = c.architecture == Architecture::kTransformer;
  o.max_length = static_cast<std::size_t>(c.max_sequence_length);
  return o;
}

// Pretrained files may use "bert."-less names and gamma/beta for norms.
std::vector<std::string> pretrained_aliases(const std::string& name) {
  std::vector<std::string> out;
  auto add_variants = [&](const std::string& n) {
    out.push_back(n);
    if (n.ends_with("LayerNorm.weight")) {
      out.push_back(n.substr(0, n.size() - 6) + "gamma");
    } else if (n.ends_with("LayerNorm.bias")) {
      out.push_back(n.substr(0, n.size() - 4) + "beta");
    }
  };
  add_variants(name);
  if (name.starts_with("bert.")) add_variants(name.substr(5));
  return out;
}

void check_pretrained_config(const std::filesystem::path& file,
                             const ModelConfig& config) {
  std::ifstream in(file);
  if (!in) return;
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw CheckpointError("unreadable " + file.string() + ": " + e.what());
  }
  auto expect = [&](const char* key, int value) {
    if (j.contains(key) && j[key].is_number_integer() && j[key].get<int>() != value) {
      throw CheckpointError(std::string("pretrained encoder ") + key + " is " +
                            std::to_string(j[key].get<int>()) + " but the model config asks for " +
                            std::to_string(value));
    }
  };
  expect("hidden_size", config.hidden_size);
  expect("num_attention_heads", config.num_attention_heads);
  expect("num_hidden_layers", config.num_blocks);
  expect("intermediate_size", config.intermediate_size);
  expect("max_position_embeddings", config.max_position_embeddings);
  expect("type_vocab_size", config.type_vocab_size);
}

}  // namespace

std::size_t ClassifierHandle::head_parameter_count() const {
  std::size_t n = 0;
  for (const auto& slot : model->layout().slots()) {
    if (slot.name.starts_with("classifier.")) n += slot.size();
  }
  return n;
}

std::size_t encoder_parameter_count(const ModelConfig& config,
                                    std::size_t vocab_size) {
  config.validate();
  const EncoderShape shape = encoder_shape(config, vocab_size, 0);
  return TransformerClassifier::parameter_count(shape) -
         TransformerClassifier::head_parameter_count(shape);
}

std::filesystem::path pretrained_cache_dir() {
  if (const char* dir = std::getenv(kCacheEnvVar); dir && *dir) return dir;
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "xoff";
  }
  return ".xoff-cache";
}

ClassifierHandle build_classifier(const ModelConfig& config,
                                  const Vocabulary* vocabulary,
                                  std::uint64_t init_seed) {
  config.validate();
  if (config.architecture != Architecture::kTransformer) {
    throw ArgumentError("build_classifier expects a transformer config");
  }
  ClassifierHandle handle;
  handle.config = config;
  if (config.encoder_id == kRandomInitEncoder) {
    if (vocabulary == nullptr) {
      throw ArgumentError("a randomly initialized encoder needs a vocabulary");
    }
    handle.tokenizer = std::make_shared<Tokenizer>(*vocabulary, tokenizer_options(config));
    auto model = std::make_unique<TransformerClassifier>(
        encoder_shape(config, vocabulary->size(), static_cast<std::size_t>(vocabulary->pad_id())));
    model->initialize(init_seed);
    handle.model = std::move(model);
    return handle;
  }

  const auto dir = pretrained_cache_dir() / config.encoder_id;
  const auto vocab_file = dir / "vocab.txt";
  const auto weights_file = dir / "model.safetensors";
  if (!std::filesystem::exists(vocab_file) || !std::filesystem::exists(weights_file)) {
    throw CheckpointError("pretrained encoder '" + config.encoder_id +
                          "' not found (looked for vocab.txt and model.safetensors in " +
                          dir.string() + ")");
  }
  check_pretrained_config(dir / "config.json", config);
  Vocabulary vocab = Vocabulary::from_file(vocab_file);
  auto model = std::make_unique<TransformerClassifier>(
      encoder_shape(config, vocab.size(), static_cast<std::size_t>(vocab.pad_id())));
  model->initialize(init_seed);
  const auto file = SafetensorsFile::open(weights_file);
  const auto missing =
      load_parameters(file, model->layout(), model->parameters(), pretrained_aliases);
  for (const auto& name : missing) {
    if (!name.starts_with("classifier.")) {
      throw CheckpointError("pretrained encoder '" + config.encoder_id +
                            "' lacks tensor " + name);
    }
  }
  handle.tokenizer = std::make_shared<Tokenizer>(std::move(vocab), tokenizer_options(config));
  handle.model = std::move(model);
  return handle;
}

ClassifierHandle build_baseline(const Vocabulary& vocabulary, int embedding_dim,
                                int hidden_dim, std::uint64_t init_seed,
                                double dropout, std::size_t max_sequence_length) {
  if (vocabulary.size() == 0) throw ArgumentError("baseline vocabulary is empty");
  if (embedding_dim < 1 || hidden_dim < 1) {
    throw ArgumentError("baseline dimensions must be positive");
  }
  ClassifierHandle handle;
  handle.config = ModelConfig::baseline();
  handle.config.embedding_dim = embedding_dim;
  handle.config.lstm_hidden_dim = hidden_dim;
  handle.config.head_dropout = dropout;
  handle.config.max_sequence_length = static_cast<int>(max_sequence_length);
  handle.config.validate();
  BiLstmShape shape;
  shape.vocab_size = vocabulary.size();
  shape.embedding_dim = static_cast<std::size_t>(embedding_dim);
  shape.hidden = static_cast<std::size_t>(hidden_dim);
  shape.pad_id = static_cast<std::size_t>(vocabulary.pad_id());
  shape.dropout = dropout;
  auto model = std::make_unique<BiLstmClassifier>(shape);
  model->initialize(init_seed);
  handle.model = std::move(model);
  handle.tokenizer = std::make_shared<Tokenizer>(vocabulary, tokenizer_options(handle.config));
  return handle;
}

ClassifierHandle build_model(const ModelConfig& config, const Vocabulary* vocabulary,
                             std::uint64_t init_seed) {
  if (config.architecture == Architecture::kBiLstm) {
    config.validate();
    if (vocabulary == nullptr) throw ArgumentError("the baseline needs a vocabulary");
    return build_baseline(*vocabulary, config.embedding_dim, config.lstm_hidden_dim,
                          init_seed, config.head_dropout,
                          static_cast<std::size_t>(config.max_sequence_length));
  }
  return build_classifier(config, vocabulary, init_seed);
}

// ---------------------------------------------------------------------------
// Schedule

namespace {

std::size_t warmup_steps(std::size_t total_steps, double warmup_fraction) {
  return static_cast<std::size_t>(
      std::ceil(warmup_fraction * static_cast<double>(total_steps) - 1e-9));
}

}  // namespace

double lr_at_step(std::size_t step, std::size_t total_steps,
                  const TrainingConfig& config) {
  if (total_steps < 1) throw ArgumentError("total_steps must be at least 1");
  if (step > total_steps) {
    throw ArgumentError("step " + std::to_string(step) + " outside [0, " +
                        std::to_string(total_steps) + "]");
  }
  const double peak = config.peak_learning_rate;
  const std::size_t warmup = std::min(warmup_steps(total_steps, config.warmup_fraction),
                                      total_steps);
  if (step == warmup && warmup > 0) return peak;
  if (warmup > 0 && step < warmup) {
    return peak * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (warmup == 0 && step == 0) return peak;
  return peak * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

std::size_t total_training_steps(std::size_t train_size, const TrainingConfig& config) {
  const auto batch = static_cast<std::size_t>(config.batch_size);
  return static_cast<std::size_t>(config.epochs) * ((train_size + batch - 1) / batch);
}

// ---------------------------------------------------------------------------
// Training

std::string training_data_hash(const Split& train) {
  ContentHash h;
  for (const auto& ex : train) {
    h.update(ex.id).update(ex.text).update(label_token(ex.label)).update(ex.language.code());
  }
  return h.hex();
}

namespace {

constexpr std::size_t kGradientShards = 4;
constexpr std::size_t kShardParameterLimit = 20'000'000;

std::vector<std::vector<int>> encode_all(const Tokenizer& tokenizer,
                                         std::span<const LabeledExample> examples) {
  std::vector<std::vector<int>> out(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) out[i] = tokenizer.ids(examples[i].text);
  return out;
}

std::vector<double> score_encoded(const SequenceClassifier& model,
                                  const std::vector<std::vector<int>>& encoded) {
  std::vector<double> logits(encoded.size());
  const auto n = static_cast<std::ptrdiff_t>(encoded.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    logits[static_cast<std::size_t>(i)] = model.logit(encoded[static_cast<std::size_t>(i)]);
  }
  return logits;
}

}  // namespace

Checkpoint fine_tune(ClassifierHandle handle, const Split& train, const Split* dev,
                     const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (!handle.model || !handle.tokenizer) throw ArgumentError("fine_tune: empty handle");
  if (train.empty()) throw ArgumentError("fine_tune: empty training set");
  const std::size_t n = train.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t batches = (n + batch - 1) / batch;
  const std::size_t total = total_training_steps(n, config);
  if (total >= 10 && config.warmup_fraction * static_cast<double>(total) < 1.0) {
    throw ArgumentError("warmup_fraction x total_steps must reach one step");
  }

  SequenceClassifier& model = *handle.model;
  const auto encoded = encode_all(*handle.tokenizer, train);
  std::vector<std::vector<int>> dev_encoded;
  if (dev && !dev->empty()) dev_encoded = encode_all(*handle.tokenizer, *dev);

  const std::size_t P = model.parameter_count();
  const std::size_t shards = P > kShardParameterLimit ? 1 : kGradientShards;
  std::vector<std::vector<Scalar>> shard_grads(shards, std::vector<Scalar>(P));
  std::vector<Scalar> grad(P), m(P, 0.0), v(P, 0.0);
  const std::uint64_t dropout_base = derive_seed(config.seed, "dropout");

  Checkpoint ck;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng order_rng(derive_seed(derive_seed(config.seed, "epoch"), static_cast<std::uint64_t>(epoch)));
    const auto order = permutation(n, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t first = b * batch;
      const std::size_t count = std::min(batch, n - first);
      const Scalar scale = 1.0 / static_cast<Scalar>(count);
      const std::size_t used = std::min(shards, count);
      std::vector<double> shard_loss(used, 0.0);
      const auto used_i = static_cast<std::ptrdiff_t>(used);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t s = 0; s < used_i; ++s) {
        const auto su = static_cast<std::size_t>(s);
        auto& g = shard_grads[su];
        std::fill(g.begin(), g.end(), 0.0);
        const std::size_t lo = first + count * su / used;
        const std::size_t hi = first + count * (su + 1) / used;
        for (std::size_t k = lo; k < hi; ++k) {
          const std::size_t idx = order[k];
          shard_loss[su] += model.accumulate_gradient(
              encoded[idx], train[idx].label == Label::kOffensive,
              derive_seed(dropout_base, step * n + k), scale, g);
        }
      }
      double batch_loss = 0.0;
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t s = 0; s < used; ++s) {
        batch_loss += shard_loss[s];
        const auto& g = shard_grads[s];
        for (std::size_t i = 0; i < P; ++i) grad[i] += g[i];
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError(step + 1, "non-finite training loss");
      }
      epoch_loss += batch_loss;

      ++step;
      const double lr = lr_at_step(step, total, config);
      const double b1 = config.adam.beta1, b2 = config.adam.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      auto params = model.parameters();
      for (std::size_t i = 0; i < P; ++i) {
        const double g = grad[i];
        if (!std::isfinite(g)) throw DivergenceError(step, "non-finite gradient");
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config.adam.epsilon);
        params[i] -= lr * (update + config.adam.weight_decay * params[i]);
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(n);
    ck.per_epoch_train_loss.push_back(mean_loss);
    std::optional<double> dev_f1;
    if (!dev_encoded.empty()) {
      const auto logits = score_encoded(model, dev_encoded);
      std::vector<Label> predicted(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i) {
        predicted[i] = sigmoid(logits[i]) > config.decision_threshold ? Label::kOffensive
                                                                      : Label::kNotOffensive;
      }
      dev_f1 = macro_f1(gold_labels(*dev), predicted).macro_f1;
      ck.per_epoch_dev_metrics.push_back({epoch, *dev_f1});
    }
    if (on_epoch) on_epoch(epoch, mean_loss, dev_f1);
  }

  std::set<Language> languages;
  for (const auto& ex : train) languages.insert(ex.language);
  ck.training_languages.assign(languages.begin(), languages.end());
  ck.model = std::move(handle.model);
  ck.tokenizer = std::move(handle.tokenizer);
  ck.model_config = handle.config;
  ck.training_config = config;
  ck.optimizer_steps = step;
  ck.data_hash = training_data_hash(train);
  return ck;
}

PredictionBatch predict_proba(const Checkpoint& checkpoint,
                              std::span<const LabeledExample> examples) {
  return predict_proba(checkpoint, examples, checkpoint.training_config.decision_threshold);
}

PredictionBatch predict_proba(const Checkpoint& checkpoint,
                              std::span<const LabeledExample> examples,
                              double decision_threshold) {
  if (examples.empty()) throw ArgumentError("predict_proba: no examples");
  if (!checkpoint.model || !checkpoint.tokenizer) {
    throw ArgumentError("predict_proba: checkpoint has no model");
  }
  const auto encoded = encode_all(*checkpoint.tokenizer, examples);
  const auto logits = score_encoded(*checkpoint.model, encoded);
  PredictionBatch out;
  out.ids.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.ids.push_back(examples[i].id);
    const double p = sigmoid(logits[i]);
    out.probabilities.push_back(p);
    out.labels.push_back(p > decision_threshold ? Label::kOffensive : Label::kNotOffensive);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  const auto sidecar = dir / "checkpoint.json";
  if (fs::exists(sidecar) && !force) throw CollisionError(sidecar);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  save_parameters(dir / "weights.safetensors", ck.model->layout(), ck.model->parameters(),
                  {{"architecture", std::string(ck.model->architecture())}});
  ck.tokenizer->vocabulary().save(dir / "vocab.txt");

  Json langs = Json::array();
  for (const auto& l : ck.training_languages) langs.push_back(l.code());
  Json epochs = Json::array();
  for (const auto& e : ck.per_epoch_dev_metrics) {
    epochs.push_back({{"epoch", e.epoch}, {"dev_macro_f1", e.dev_macro_f1}});
  }
  Json j = {{"weights", "weights.safetensors"},
            {"vocabulary", "vocab.txt"},
            {"model_config", to_json(ck.model_config)},
            {"training_config", to_json(ck.training_config)},
            {"training_languages", langs},
            {"per_epoch_dev_metrics", epochs},
            {"per_epoch_train_loss", ck.per_epoch_train_loss},
            {"optimizer_steps", ck.optimizer_steps},
            {"data_hash", ck.data_hash}};
  std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + sidecar.string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto sidecar = dir / "checkpoint.json";
  std::ifstream in(sidecar);
  if (!in) throw CheckpointError("no checkpoint at " + dir.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw CheckpointError("corrupt " + sidecar.string() + ": " + e.what());
  }
  Checkpoint ck;
  try {
    ck.model_config = model_config_from_json(j.at("model_config"), "model_config");
    ck.training_config = training_config_from_json(j.at("training_config"), "training_config");
    for (const auto& code : j.at("training_languages")) {
      ck.training_languages.push_back(Language::parse(code.get<std::string>()));
    }
    for (const auto& e : j.at("per_epoch_dev_metrics")) {
      ck.per_epoch_dev_metrics.push_back(
          {e.at("epoch").get<int>(), e.at("dev_macro_f1").get<double>()});
    }
    ck.per_epoch_train_loss = j.at("per_epoch_train_loss").get<std::vector<double>>();
    ck.optimizer_steps = j.at("optimizer_steps").get<std::size_t>();
    ck.data_hash = j.at("data_hash").get<std::string>();
  } catch (const Json::exception& e) {
    throw CheckpointError("malformed " + sidecar.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("malformed " + sidecar.string() + ": " + e.what());
  }

  Vocabulary vocab = Vocabulary::from_file(dir / j.value("vocabulary", "vocab.txt"));
  ModelConfig random_init = ck.model_config;
  random_init.encoder_id = std::string(kRandomInitEncoder);
  ClassifierHandle handle = build_model(random_init, &vocab, 0);
  handle.config = ck.model_config;
  auto* model = handle.model.get();
  const auto file = SafetensorsFile::open(dir / j.value("weights", "weights.safetensors"));
  const auto missing = load_parameters(file, model->layout(), model->parameters());
  if (!missing.empty()) throw CheckpointError("checkpoint lacks tensor " + missing.front());
  ck.model = std::move(handle.model);
  ck.tokenizer = std::move(handle.tokenizer);
  return ck;
}

}  // namespace xoff
