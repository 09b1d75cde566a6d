#include "xoff/model.hpp"

#include <cmath>

#include "xoff/error.hpp"

namespace xoff {

Scalar sigmoid(Scalar x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

Scalar bce_with_logit(Scalar logit, bool positive) {
  // log(1 + exp(-|z|)) + max(z, 0) - y z
  const Scalar y = positive ? 1.0 : 0.0;
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

std::vector<Scalar> dropout_mask(std::size_t n, Scalar p, Rng& rng) {
  std::vector<Scalar> mask(n, 1.0);
  if (p <= 0.0) return mask;
  const Scalar keep = 1.0 / (1.0 - p);
  for (auto& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

Matrix SequenceClassifier::embed(std::span<const int> ids) const {
  const TensorSlot& slot = word_embedding_slot();
  ConstMatrixView table = slot_view(parameters(), slot);
  Matrix out(ids.size(), slot.cols);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto id = static_cast<std::size_t>(ids[t]);
    if (id >= slot.rows) throw ArgumentError("token id out of vocabulary range");
    std::copy(table.row(id), table.row(id) + slot.cols, out.row(t));
  }
  return out;
}

Scalar SequenceClassifier::logit(std::span<const int> ids) const {
  const Matrix e = embed(ids);
  return forward(e, ForwardOptions{}, nullptr);
}

Scalar SequenceClassifier::accumulate_gradient(std::span<const int> ids,
                                               bool offensive,
                                               std::uint64_t dropout_seed,
                                               Scalar scale,
                                               std::span<Scalar> d_params,
                                               bool training) const {
  const Matrix e = embed(ids);
  std::unique_ptr<ForwardState> state;
  const Scalar z = forward(e, ForwardOptions{training, dropout_seed}, &state);
  const Scalar loss = bce_with_logit(z, offensive);
  if (!std::isfinite(loss)) return loss;
  const Scalar d_logit = scale * (sigmoid(z) - (offensive ? 1.0 : 0.0));
  Matrix d_embed(e.rows(), e.cols());
  backward(*state, d_logit, d_embed, d_params);
  MatrixView table = slot_view(d_params, word_embedding_slot());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    Scalar* dst = table.row(static_cast<std::size_t>(ids[t]));
    const Scalar* src = d_embed.row(t);
    for (std::size_t j = 0; j < e.cols(); ++j) dst[j] += src[j];
  }
  return loss;
}

}  // namespace xoff
