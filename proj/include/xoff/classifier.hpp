#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xoff/corpus.hpp"
#include "xoff/model.hpp"
#include "xoff/tokenizer.hpp"

namespace xoff {

enum class Architecture { kTransformer, kBiLstm };

std::string_view architecture_name(Architecture a);
Architecture parse_architecture(std::string_view name);

// Encoder id meaning "randomly initialized, vocabulary built from the data".
inline constexpr std::string_view kRandomInitEncoder = "random-init";
// Directory holding pretrained encoders as <id>/{vocab.txt,model.safetensors}.
inline constexpr const char* kCacheEnvVar = "XOFF_CACHE_DIR";

struct ModelConfig {
  Architecture architecture = Architecture::kTransformer;
  std::string encoder_id = "bert-base-multilingual-cased";
  int num_blocks = 12;
  int num_attention_heads = 12;
  int hidden_size = 768;
  int intermediate_size = 3072;
  double head_dropout = 0.1;
  int max_sequence_length = 128;
  int max_position_embeddings = 512;
  int type_vocab_size = 2;
  bool lowercase = false;
  // Baseline only.
  int embedding_dim = 100;
  int lstm_hidden_dim = 128;

  // Throws ArgumentError when an invariant fails.
  void validate() const;

  static ModelConfig reference();
  // 2 blocks, 2 heads, hidden 32, random initialization.
  static ModelConfig desk();
  static ModelConfig baseline();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

struct TrainingConfig {
  int epochs = 10;
  int batch_size = 32;
  double peak_learning_rate = 5e-5;
  double warmup_fraction = 0.1;
  std::string loss = "binary_cross_entropy";
  std::string optimizer = "adam";
  AdamSettings adam;
  std::uint64_t seed = 42;
  double decision_threshold = 0.5;

  void validate() const;

  // Settings that fit the desk encoder on synthetic corpora in seconds.
  static TrainingConfig desk();

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// An untrained model together with its tokenizer.
struct ClassifierHandle {
  ModelConfig config;
  std::shared_ptr<const Tokenizer> tokenizer;
  std::unique_ptr<SequenceClassifier> model;

  std::size_t parameter_count() const { return model->parameter_count(); }
  std::size_t head_parameter_count() const;
};

// Parameter count of the encoder described by `config` (pooler included,
// head excluded), computed from shapes without allocating.
std::size_t encoder_parameter_count(const ModelConfig& config,
                                    std::size_t vocab_size);

std::filesystem::path pretrained_cache_dir();

// Transformer classifier. With the random-init encoder `vocabulary` is
// required; otherwise weights and vocabulary come from the pretrained cache.
ClassifierHandle build_classifier(const ModelConfig& config,
                                  const Vocabulary* vocabulary = nullptr,
                                  std::uint64_t init_seed = 0);

ClassifierHandle build_baseline(const Vocabulary& vocabulary, int embedding_dim,
                                int hidden_dim, std::uint64_t init_seed = 0,
                                double dropout = 0.1,
                                std::size_t max_sequence_length = 128);

// Either kind of handle, chosen by config.architecture.
ClassifierHandle build_model(const ModelConfig& config,
                             const Vocabulary* vocabulary,
                             std::uint64_t init_seed);

// Linear warm-up to the peak over ceil(warmup_fraction * total) steps, then
// linear decay to zero at `total_steps`.
double lr_at_step(std::size_t step, std::size_t total_steps,
                  const TrainingConfig& config);

std::size_t total_training_steps(std::size_t train_size,
                                 const TrainingConfig& config);

struct EpochMetric {
  int epoch = 0;
  double dev_macro_f1 = 0.0;
  friend bool operator==(const EpochMetric&, const EpochMetric&) = default;
};

struct Checkpoint {
  std::shared_ptr<const SequenceClassifier> model;
  std::shared_ptr<const Tokenizer> tokenizer;
  ModelConfig model_config;
  TrainingConfig training_config;
  std::vector<Language> training_languages;
  std::vector<EpochMetric> per_epoch_dev_metrics;
  std::vector<double> per_epoch_train_loss;
  std::size_t optimizer_steps = 0;
  std::string data_hash;
};

std::string training_data_hash(const Split& train);

using EpochCallback = std::function<void(int epoch, double mean_loss,
                                         std::optional<double> dev_macro_f1)>;

// Fine-tunes for exactly epochs x ceil(|train| / batch) Adam steps and keeps
// the final weights; dev macro-F1 is recorded after every epoch.
Checkpoint fine_tune(ClassifierHandle handle, const Split& train,
                     const Split* dev, const TrainingConfig& config,
                     const EpochCallback& on_epoch = {});

struct PredictionBatch {
  std::vector<std::string> ids;
  std::vector<double> probabilities;  // P(OFFENSIVE)
  std::vector<Label> labels;
};

PredictionBatch predict_proba(const Checkpoint& checkpoint,
                              std::span<const LabeledExample> examples);

// Scores with an explicit threshold instead of the checkpoint's.
PredictionBatch predict_proba(const Checkpoint& checkpoint,
                              std::span<const LabeledExample> examples,
                              double decision_threshold);

// <dir>/weights.safetensors + vocab.txt + checkpoint.json.
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& dir, bool force = false);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace xoff
