#pragma once

#include <cstdint>
#include <string>

#include "xoff/model.hpp"

namespace xoff {

struct EncoderShape {
  std::size_t vocab_size = 0;
  std::size_t hidden = 768;
  std::size_t heads = 12;
  std::size_t blocks = 12;
  std::size_t intermediate = 3072;
  std::size_t max_positions = 512;
  std::size_t type_vocab = 2;
  std::size_t pad_id = 0;
  Scalar dropout = 0.1;
  Scalar layer_norm_eps = 1e-12;
};

// BERT-style post-norm encoder: embeddings (word + position + segment,
// layer norm), `blocks` x [multi-head self-attention, add & norm, GELU
// feed-forward, add & norm], a tanh pooler over the first position, dropout,
// and a single linear unit. Parameter names follow the HuggingFace BERT
// layout so pretrained safetensors checkpoints load directly.
class TransformerClassifier final : public SequenceClassifier {
 public:
  explicit TransformerClassifier(const EncoderShape& shape);

  // BERT initialization: N(0, 0.02) weights, zero biases, unit norm scales,
  // zero padding embedding.
  void initialize(std::uint64_t seed);

  static std::size_t parameter_count(const EncoderShape& shape);
  static std::size_t head_parameter_count(const EncoderShape& shape) {
    return shape.hidden + 1;
  }

  const EncoderShape& shape() const { return shape_; }
  std::string_view architecture() const override { return "transformer"; }

  Scalar forward(ConstMatrixView embeddings, const ForwardOptions& options,
                 std::unique_ptr<ForwardState>* state) const override;
  void backward(const ForwardState& state, Scalar d_logit,
                MatrixView d_embeddings,
                std::span<Scalar> d_params) const override;

 private:
  struct BlockSlots {
    std::size_t q_w, q_b, k_w, k_b, v_w, v_b, ao_w, ao_b, ln1_g, ln1_b;
    std::size_t ff1_w, ff1_b, ff2_w, ff2_b, ln2_g, ln2_b;
  };
  struct Slots {
    std::size_t word, position, type, emb_ln_g, emb_ln_b;
    std::vector<BlockSlots> blocks;
    std::size_t pool_w, pool_b, head_w, head_b;
  };

  static Slots build_layout(const EncoderShape& shape, ParameterLayout& layout);

  EncoderShape shape_;
  Slots slots_;
};

}  // namespace xoff
