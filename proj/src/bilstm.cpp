#include "xoff/bilstm.hpp"

#include <cmath>

#include "xoff/error.hpp"
#include "xoff/kernels.hpp"

namespace xoff {

namespace {

// Per-direction activations, rows in processing order.
struct DirectionCache {
  Matrix gates;   // T x 4h, post-activation (i, f, g, o)
  Matrix cells;   // T x h
  Matrix tanh_c;  // T x h
  Matrix hidden;  // T x h
};

struct LstmState final : ForwardState {
  std::size_t length = 0;
  Matrix inputs;  // T x e, original order
  DirectionCache fwd, bwd;
  std::vector<Scalar> features, mask, head_input;
};

Scalar logistic(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

// Runs one direction; `order` maps step -> input row.
void run_direction(ConstMatrixView x, const std::vector<std::size_t>& order,
                   ConstMatrixView w_ih, ConstMatrixView w_hh, const Scalar* bias,
                   std::size_t h, DirectionCache& c) {
  const std::size_t T = order.size();
  Matrix xs(T, x.cols);
  for (std::size_t s = 0; s < T; ++s) {
    std::copy(x.row(order[s]), x.row(order[s]) + x.cols, xs.row(s));
  }
  c.gates = Matrix(T, 4 * h);
  kernels::matmul_nt(xs, w_ih, bias, c.gates);
  c.cells = Matrix(T, h);
  c.tanh_c = Matrix(T, h);
  c.hidden = Matrix(T, h);
  for (std::size_t s = 0; s < T; ++s) {
    Scalar* gate = c.gates.row(s);
    if (s > 0) {
      const Scalar* hp = c.hidden.row(s - 1);
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const Scalar* wr = w_hh.row(r);
        Scalar acc = 0.0;
        for (std::size_t k = 0; k < h; ++k) acc += wr[k] * hp[k];
        gate[r] += acc;
      }
    }
    for (std::size_t k = 0; k < h; ++k) {
      gate[k] = logistic(gate[k]);
      gate[h + k] = logistic(gate[h + k]);
      gate[2 * h + k] = std::tanh(gate[2 * h + k]);
      gate[3 * h + k] = logistic(gate[3 * h + k]);
      const Scalar c_prev = s > 0 ? c.cells(s - 1, k) : 0.0;
      c.cells(s, k) = gate[h + k] * c_prev + gate[k] * gate[2 * h + k];
      c.tanh_c(s, k) = std::tanh(c.cells(s, k));
      c.hidden(s, k) = gate[3 * h + k] * c.tanh_c(s, k);
    }
  }
}

// Backpropagates d(final hidden) through one direction.
void backprop_direction(ConstMatrixView x, const std::vector<std::size_t>& order,
                        ConstMatrixView w_ih, ConstMatrixView w_hh,
                        std::size_t h, const DirectionCache& c,
                        std::vector<Scalar> dh, Matrix& dx, MatrixView dw_ih,
                        MatrixView dw_hh, Scalar* dbias, bool params) {
  const std::size_t T = order.size();
  Matrix dgates(T, 4 * h);
  std::vector<Scalar> dc(h, 0.0);
  for (std::size_t s = T; s-- > 0;) {
    const Scalar* gate = c.gates.row(s);
    Scalar* dg = dgates.row(s);
    for (std::size_t k = 0; k < h; ++k) {
      const Scalar i = gate[k], f = gate[h + k], g = gate[2 * h + k],
                   o = gate[3 * h + k];
      const Scalar tc = c.tanh_c(s, k);
      const Scalar c_prev = s > 0 ? c.cells(s - 1, k) : 0.0;
      const Scalar d_o = dh[k] * tc;
      const Scalar d_c = dc[k] + dh[k] * o * (1.0 - tc * tc);
      dg[k] = d_c * g * i * (1.0 - i);
      dg[h + k] = d_c * c_prev * f * (1.0 - f);
      dg[2 * h + k] = d_c * i * (1.0 - g * g);
      dg[3 * h + k] = d_o * o * (1.0 - o);
      dc[k] = d_c * f;
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    if (s > 0) {
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const Scalar* wr = w_hh.row(r);
        for (std::size_t k = 0; k < h; ++k) dh[k] += dg[r] * wr[k];
      }
    }
  }
  Matrix xs(T, x.cols);
  for (std::size_t s = 0; s < T; ++s) {
    std::copy(x.row(order[s]), x.row(order[s]) + x.cols, xs.row(s));
  }
  if (params) {
    kernels::matmul_tn_acc(dgates, xs, dw_ih);
    if (T > 1) {
      kernels::matmul_tn_acc(dgates.view().rows_range(1, T - 1),
                             c.hidden.view().rows_range(0, T - 1), dw_hh);
    }
    kernels::column_sums_acc(dgates, dbias);
  }
  Matrix dxs(T, x.cols);
  kernels::matmul_nn(dgates, w_ih, dxs);
  for (std::size_t s = 0; s < T; ++s) {
    Scalar* dst = dx.row(order[s]);
    for (std::size_t j = 0; j < x.cols; ++j) dst[j] += dxs(s, j);
  }
}

}  // namespace

BiLstmClassifier::BiLstmClassifier(const BiLstmShape& shape) : shape_(shape) {
  if (shape.vocab_size == 0) throw ArgumentError("baseline vocabulary is empty");
  if (shape.embedding_dim == 0 || shape.hidden == 0) {
    throw ArgumentError("baseline dimensions must be positive");
  }
  const std::size_t e = shape.embedding_dim, h = shape.hidden;
  word_ = layout_.add_matrix("embedding.weight", shape.vocab_size, e);
  fwd_.w_ih = layout_.add_matrix("lstm.weight_ih_l0", 4 * h, e);
  fwd_.w_hh = layout_.add_matrix("lstm.weight_hh_l0", 4 * h, h);
  fwd_.bias = layout_.add_vector("lstm.bias_l0", 4 * h);
  bwd_.w_ih = layout_.add_matrix("lstm.weight_ih_l0_reverse", 4 * h, e);
  bwd_.w_hh = layout_.add_matrix("lstm.weight_hh_l0_reverse", 4 * h, h);
  bwd_.bias = layout_.add_vector("lstm.bias_l0_reverse", 4 * h);
  head_w_ = layout_.add_matrix("classifier.weight", 1, 2 * h);
  head_b_ = layout_.add_vector("classifier.bias", 1);
  finalize_layout(word_);
}

void BiLstmClassifier::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto P = parameters();
  const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(shape_.hidden));
  for (const auto& slot : layout_.slots()) {
    auto values = P.subspan(slot.offset, slot.size());
    if (slot.name == "embedding.weight") {
      fill_normal(values, 1.0, rng);
    } else {
      fill_uniform(values, bound, rng);
    }
  }
  if (shape_.pad_id < shape_.vocab_size) {
    MatrixView word = slot_view(P, layout_.slot(word_));
    std::fill(word.row(shape_.pad_id), word.row(shape_.pad_id) + shape_.embedding_dim, 0.0);
  }
}

Scalar BiLstmClassifier::forward(ConstMatrixView emb, const ForwardOptions& options,
                                 std::unique_ptr<ForwardState>* out) const {
  const std::size_t T = emb.rows;
  const std::size_t h = shape_.hidden;
  if (emb.cols != shape_.embedding_dim) {
    throw ArgumentError("embedding width does not match the baseline");
  }
  if (T == 0) throw ArgumentError("empty sequence");
  auto P = parameters();
  auto view = [&](std::size_t slot) { return slot_view(P, layout_.slot(slot)); };
  auto ptr = [&](std::size_t slot) { return P.data() + layout_.slot(slot).offset; };

  auto st = std::make_unique<LstmState>();
  st->length = T;
  st->inputs = Matrix(T, emb.cols);
  for (std::size_t t = 0; t < T; ++t) std::copy(emb.row(t), emb.row(t) + emb.cols, st->inputs.row(t));

  std::vector<std::size_t> forward_order(T), backward_order(T);
  for (std::size_t t = 0; t < T; ++t) {
    forward_order[t] = t;
    backward_order[t] = T - 1 - t;
  }
  run_direction(st->inputs, forward_order, view(fwd_.w_ih), view(fwd_.w_hh),
                ptr(fwd_.bias), h, st->fwd);
  run_direction(st->inputs, backward_order, view(bwd_.w_ih), view(bwd_.w_hh),
                ptr(bwd_.bias), h, st->bwd);

  st->features.resize(2 * h);
  std::copy(st->fwd.hidden.row(T - 1), st->fwd.hidden.row(T - 1) + h, st->features.begin());
  std::copy(st->bwd.hidden.row(T - 1), st->bwd.hidden.row(T - 1) + h,
            st->features.begin() + static_cast<std::ptrdiff_t>(h));
  if (options.training && shape_.dropout > 0.0) {
    Rng rng(options.dropout_seed);
    st->mask = dropout_mask(2 * h, shape_.dropout, rng);
  }
  st->head_input = st->features;
  for (std::size_t j = 0; j < st->mask.size(); ++j) st->head_input[j] *= st->mask[j];
  const Scalar* hw = ptr(head_w_);
  Scalar logit = *ptr(head_b_);
  for (std::size_t j = 0; j < 2 * h; ++j) logit += hw[j] * st->head_input[j];
  if (out) *out = std::move(st);
  return logit;
}

void BiLstmClassifier::backward(const ForwardState& state, Scalar g,
                                MatrixView d_emb, std::span<Scalar> dP) const {
  const auto& st = dynamic_cast<const LstmState&>(state);
  const std::size_t T = st.length;
  const std::size_t h = shape_.hidden;
  const bool params = !dP.empty();
  auto P = parameters();
  auto view = [&](std::size_t slot) { return slot_view(P, layout_.slot(slot)); };
  auto gview = [&](std::size_t slot) {
    return params ? slot_view(dP, layout_.slot(slot)) : MatrixView{};
  };
  auto gptr = [&](std::size_t slot) {
    return params ? dP.data() + layout_.slot(slot).offset : nullptr;
  };

  const Scalar* hw = P.data() + layout_.slot(head_w_).offset;
  std::vector<Scalar> dfeat(2 * h);
  for (std::size_t j = 0; j < 2 * h; ++j) {
    dfeat[j] = g * hw[j] * (st.mask.empty() ? 1.0 : st.mask[j]);
  }
  if (params) {
    Scalar* dhw = gptr(head_w_);
    for (std::size_t j = 0; j < 2 * h; ++j) dhw[j] += g * st.head_input[j];
    *gptr(head_b_) += g;
  }

  std::vector<std::size_t> forward_order(T), backward_order(T);
  for (std::size_t t = 0; t < T; ++t) {
    forward_order[t] = t;
    backward_order[t] = T - 1 - t;
  }
  Matrix dx(T, shape_.embedding_dim);
  backprop_direction(st.inputs, forward_order, view(fwd_.w_ih), view(fwd_.w_hh), h,
                     st.fwd, std::vector<Scalar>(dfeat.begin(), dfeat.begin() + h), dx,
                     gview(fwd_.w_ih), gview(fwd_.w_hh), gptr(fwd_.bias), params);
  backprop_direction(st.inputs, backward_order, view(bwd_.w_ih), view(bwd_.w_hh), h,
                     st.bwd, std::vector<Scalar>(dfeat.begin() + h, dfeat.end()), dx,
                     gview(bwd_.w_ih), gview(bwd_.w_hh), gptr(bwd_.bias), params);
  if (d_emb.data != nullptr) {
    for (std::size_t t = 0; t < T; ++t) std::copy(dx.row(t), dx.row(t) + dx.cols(), d_emb.row(t));
  }
}

}  // namespace xoff
