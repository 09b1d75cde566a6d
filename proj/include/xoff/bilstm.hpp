#pragma once

#include <cstdint>

#include "xoff/model.hpp"

namespace xoff {

struct BiLstmShape {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 100;
  std::size_t hidden = 128;
  std::size_t pad_id = 0;
  Scalar dropout = 0.1;
};

// Bidirectional LSTM over learned embeddings; the final forward state and the
// final backward state are concatenated and fed to one linear unit.
// Gate order in the stacked weights is input, forget, cell, output.
class BiLstmClassifier final : public SequenceClassifier {
 public:
  explicit BiLstmClassifier(const BiLstmShape& shape);

  // N(0, 1) embeddings, U(-1/sqrt(h), 1/sqrt(h)) recurrent weights.
  void initialize(std::uint64_t seed);

  const BiLstmShape& shape() const { return shape_; }
  std::string_view architecture() const override { return "bilstm"; }

  Scalar forward(ConstMatrixView embeddings, const ForwardOptions& options,
                 std::unique_ptr<ForwardState>* state) const override;
  void backward(const ForwardState& state, Scalar d_logit,
                MatrixView d_embeddings,
                std::span<Scalar> d_params) const override;

 private:
  struct Direction {
    std::size_t w_ih, w_hh, bias;
  };

  BiLstmShape shape_;
  std::size_t word_;
  Direction fwd_, bwd_;
  std::size_t head_w_, head_b_;
};

}  // namespace xoff
