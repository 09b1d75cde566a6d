#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "xoff/parameters.hpp"
#include "xoff/tensor.hpp"

namespace xoff {

// Activations a model keeps between forward and backward.
class ForwardState {
 public:
  virtual ~ForwardState() = default;
};

struct ForwardOptions {
  bool training = false;           // enables dropout
  std::uint64_t dropout_seed = 0;  // per-example, so parallel runs match serial
};

// A binary sequence classifier producing one real logit. Inputs enter as
// word-embedding rows (one per token) so attribution can interpolate them;
// the word-embedding table itself is one of the model's parameters.
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;

  virtual std::string_view architecture() const = 0;

  virtual Scalar forward(ConstMatrixView embeddings, const ForwardOptions& options,
                         std::unique_ptr<ForwardState>* state) const = 0;

  // Propagates d(loss)/d(logit). Either output may be empty to skip it.
  // Parameter gradients are accumulated, embedding gradients overwritten.
  virtual void backward(const ForwardState& state, Scalar d_logit,
                        MatrixView d_embeddings,
                        std::span<Scalar> d_params) const = 0;

  const ParameterLayout& layout() const { return layout_; }
  std::span<Scalar> parameters() { return params_; }
  std::span<const Scalar> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  const TensorSlot& word_embedding_slot() const {
    return layout_.slot(word_embedding_index_);
  }
  std::size_t embedding_dim() const { return word_embedding_slot().cols; }
  std::size_t vocabulary_size() const { return word_embedding_slot().rows; }

  Matrix embed(std::span<const int> ids) const;

  Scalar logit(std::span<const int> ids) const;

  // Forward, binary cross entropy, backward, and scatter into the embedding
  // table. Gradients are scaled by `scale` (1/batch) and accumulated.
  // Returns the unscaled loss. `training` false disables dropout.
  Scalar accumulate_gradient(std::span<const int> ids, bool offensive,
                             std::uint64_t dropout_seed, Scalar scale,
                             std::span<Scalar> d_params, bool training = true) const;

 protected:
  void finalize_layout(std::size_t word_embedding_index) {
    word_embedding_index_ = word_embedding_index;
    params_.assign(layout_.total(), 0.0);
  }

  ParameterLayout layout_;
  std::vector<Scalar> params_;
  std::size_t word_embedding_index_ = 0;
};

Scalar sigmoid(Scalar x);
// Numerically stable -[y log s(z) + (1-y) log(1-s(z))].
Scalar bce_with_logit(Scalar logit, bool positive);

// Inverted-dropout keep mask (0 or 1/(1-p)) drawn from a seeded stream.
std::vector<Scalar> dropout_mask(std::size_t n, Scalar p, Rng& rng);

}  // namespace xoff
