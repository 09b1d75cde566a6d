#include "xoff/transformer.hpp"

#include <cmath>

#include "xoff/error.hpp"
#include "xoff/kernels.hpp"

namespace xoff {

namespace {

struct BlockCache {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> probs;
  Matrix context;
  std::vector<Scalar> attn_mask;
  Matrix ln1_out, ln1_xhat;
  std::vector<Scalar> ln1_inv;
  Matrix ffn_pre, ffn_act;
  std::vector<Scalar> ffn_mask;
  Matrix ln2_xhat;
  std::vector<Scalar> ln2_inv;
};

struct TransformerState final : ForwardState {
  std::size_t length = 0;
  Matrix emb_xhat;
  std::vector<Scalar> emb_inv;
  std::vector<Scalar> emb_mask;
  std::vector<BlockCache> blocks;
  std::vector<Scalar> first_hidden;
  std::vector<Scalar> pooled;
  std::vector<Scalar> head_mask;
  std::vector<Scalar> head_input;
};

constexpr Scalar kInvSqrt2 = 0.70710678118654752440;
constexpr Scalar kInvSqrt2Pi = 0.39894228040143267794;

Scalar gelu(Scalar x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
Scalar gelu_grad(Scalar x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void apply_mask(Matrix& m, const std::vector<Scalar>& mask) {
  if (mask.empty()) return;
  auto flat = m.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] *= mask[i];
}

void add_into(Matrix& dst, const Matrix& src) {
  auto d = dst.flat();
  auto s = src.flat();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

TransformerClassifier::Slots TransformerClassifier::build_layout(
    const EncoderShape& s, ParameterLayout& layout) {
  Slots slots;
  const std::string e = "bert.embeddings.";
  slots.word = layout.add_matrix(e + "word_embeddings.weight", s.vocab_size, s.hidden);
  slots.position =
      layout.add_matrix(e + "position_embeddings.weight", s.max_positions, s.hidden);
  slots.type =
      layout.add_matrix(e + "token_type_embeddings.weight", s.type_vocab, s.hidden);
  slots.emb_ln_g = layout.add_vector(e + "LayerNorm.weight", s.hidden);
  slots.emb_ln_b = layout.add_vector(e + "LayerNorm.bias", s.hidden);
  for (std::size_t b = 0; b < s.blocks; ++b) {
    const std::string p = "bert.encoder.layer." + std::to_string(b) + ".";
    BlockSlots bs{};
    bs.q_w = layout.add_matrix(p + "attention.self.query.weight", s.hidden, s.hidden);
    bs.q_b = layout.add_vector(p + "attention.self.query.bias", s.hidden);
    bs.k_w = layout.add_matrix(p + "attention.self.key.weight", s.hidden, s.hidden);
    bs.k_b = layout.add_vector(p + "attention.self.key.bias", s.hidden);
    bs.v_w = layout.add_matrix(p + "attention.self.value.weight", s.hidden, s.hidden);
    bs.v_b = layout.add_vector(p + "attention.self.value.bias", s.hidden);
    bs.ao_w = layout.add_matrix(p + "attention.output.dense.weight", s.hidden, s.hidden);
    bs.ao_b = layout.add_vector(p + "attention.output.dense.bias", s.hidden);
    bs.ln1_g = layout.add_vector(p + "attention.output.LayerNorm.weight", s.hidden);
    bs.ln1_b = layout.add_vector(p + "attention.output.LayerNorm.bias", s.hidden);
    bs.ff1_w = layout.add_matrix(p + "intermediate.dense.weight", s.intermediate, s.hidden);
    bs.ff1_b = layout.add_vector(p + "intermediate.dense.bias", s.intermediate);
    bs.ff2_w = layout.add_matrix(p + "output.dense.weight", s.hidden, s.intermediate);
    bs.ff2_b = layout.add_vector(p + "output.dense.bias", s.hidden);
    bs.ln2_g = layout.add_vector(p + "output.LayerNorm.weight", s.hidden);
    bs.ln2_b = layout.add_vector(p + "output.LayerNorm.bias", s.hidden);
    slots.blocks.push_back(bs);
  }
  slots.pool_w = layout.add_matrix("bert.pooler.dense.weight", s.hidden, s.hidden);
  slots.pool_b = layout.add_vector("bert.pooler.dense.bias", s.hidden);
  slots.head_w = layout.add_matrix("classifier.weight", 1, s.hidden);
  slots.head_b = layout.add_vector("classifier.bias", 1);
  return slots;
}

TransformerClassifier::TransformerClassifier(const EncoderShape& shape)
    : shape_(shape) {
  if (shape.hidden == 0 || shape.heads == 0 || shape.hidden % shape.heads != 0) {
    throw ArgumentError("hidden size must be a positive multiple of the head count");
  }
  if (shape.vocab_size == 0 || shape.max_positions < 2 || shape.blocks == 0 ||
      shape.intermediate == 0 || shape.type_vocab == 0) {
    throw ArgumentError("invalid encoder shape");
  }
  slots_ = build_layout(shape_, layout_);
  finalize_layout(slots_.word);
}

std::size_t TransformerClassifier::parameter_count(const EncoderShape& shape) {
  ParameterLayout layout;
  build_layout(shape, layout);
  return layout.total();
}

void TransformerClassifier::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto P = parameters();
  for (const auto& slot : layout_.slots()) {
    auto values = P.subspan(slot.offset, slot.size());
    if (slot.is_vector) {
      const bool scale = slot.name.ends_with("LayerNorm.weight");
      std::fill(values.begin(), values.end(), scale ? 1.0 : 0.0);
    } else {
      fill_normal(values, 0.02, rng);
    }
  }
  if (shape_.pad_id < shape_.vocab_size) {
    MatrixView word = slot_view(P, layout_.slot(slots_.word));
    std::fill(word.row(shape_.pad_id), word.row(shape_.pad_id) + shape_.hidden, 0.0);
  }
}

Scalar TransformerClassifier::forward(ConstMatrixView emb,
                                      const ForwardOptions& options,
                                      std::unique_ptr<ForwardState>* out) const {
  const std::size_t T = emb.rows;
  const std::size_t H = shape_.hidden;
  const std::size_t A = shape_.heads;
  const std::size_t D = H / A;
  if (emb.cols != H) throw ArgumentError("embedding width does not match hidden size");
  if (T == 0 || T > shape_.max_positions) {
    throw ArgumentError("sequence length " + std::to_string(T) +
                        " outside [1, max_positions]");
  }
  const bool drop = options.training && shape_.dropout > 0.0;
  const Scalar p = shape_.dropout;
  Rng rng(options.dropout_seed);
  auto P = parameters();
  auto view = [&](std::size_t slot) { return slot_view(P, layout_.slot(slot)); };
  auto ptr = [&](std::size_t slot) { return P.data() + layout_.slot(slot).offset; };

  auto st = std::make_unique<TransformerState>();
  st->length = T;

  Matrix e(T, H);
  {
    ConstMatrixView pos = view(slots_.position);
    ConstMatrixView type = view(slots_.type);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < H; ++j) e(t, j) = emb(t, j) + pos(t, j) + type(0, j);
    }
  }
  Matrix x(T, H);
  st->emb_xhat = Matrix(T, H);
  st->emb_inv.resize(T);
  kernels::layer_norm(e, ptr(slots_.emb_ln_g), ptr(slots_.emb_ln_b),
                      shape_.layer_norm_eps, x, st->emb_xhat, st->emb_inv);
  if (drop) st->emb_mask = dropout_mask(T * H, p, rng);
  apply_mask(x, st->emb_mask);

  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(D));
  for (const auto& bs : slots_.blocks) {
    BlockCache& c = st->blocks.emplace_back();
    c.input = x;
    c.q = Matrix(T, H);
    c.k = Matrix(T, H);
    c.v = Matrix(T, H);
    kernels::matmul_nt(x, view(bs.q_w), ptr(bs.q_b), c.q);
    kernels::matmul_nt(x, view(bs.k_w), ptr(bs.k_b), c.k);
    kernels::matmul_nt(x, view(bs.v_w), ptr(bs.v_b), c.v);

    c.context = Matrix(T, H);
    c.probs.resize(A);
    for (std::size_t h = 0; h < A; ++h) {
      Matrix s(T, T);
      kernels::matmul_nt(c.q.view().columns(h * D, D), c.k.view().columns(h * D, D),
                         nullptr, s);
      for (auto& v : s.flat()) v *= scale;
      kernels::softmax_rows(s);
      kernels::matmul_nn(s, c.v.view().columns(h * D, D),
                         c.context.view().columns(h * D, D));
      c.probs[h] = std::move(s);
    }

    Matrix r1(T, H);
    kernels::matmul_nt(c.context, view(bs.ao_w), ptr(bs.ao_b), r1);
    if (drop) c.attn_mask = dropout_mask(T * H, p, rng);
    apply_mask(r1, c.attn_mask);
    add_into(r1, x);
    c.ln1_out = Matrix(T, H);
    c.ln1_xhat = Matrix(T, H);
    c.ln1_inv.resize(T);
    kernels::layer_norm(r1, ptr(bs.ln1_g), ptr(bs.ln1_b), shape_.layer_norm_eps,
                        c.ln1_out, c.ln1_xhat, c.ln1_inv);

    c.ffn_pre = Matrix(T, shape_.intermediate);
    kernels::matmul_nt(c.ln1_out, view(bs.ff1_w), ptr(bs.ff1_b), c.ffn_pre);
    c.ffn_act = c.ffn_pre;
    for (auto& v : c.ffn_act.flat()) v = gelu(v);
    Matrix r2(T, H);
    kernels::matmul_nt(c.ffn_act, view(bs.ff2_w), ptr(bs.ff2_b), r2);
    if (drop) c.ffn_mask = dropout_mask(T * H, p, rng);
    apply_mask(r2, c.ffn_mask);
    add_into(r2, c.ln1_out);

    x = Matrix(T, H);
    c.ln2_xhat = Matrix(T, H);
    c.ln2_inv.resize(T);
    kernels::layer_norm(r2, ptr(bs.ln2_g), ptr(bs.ln2_b), shape_.layer_norm_eps,
                        x, c.ln2_xhat, c.ln2_inv);
  }

  st->first_hidden.assign(x.row(0), x.row(0) + H);
  st->pooled.assign(H, 0.0);
  {
    ConstMatrixView pw = view(slots_.pool_w);
    const Scalar* pb = ptr(slots_.pool_b);
    for (std::size_t j = 0; j < H; ++j) {
      Scalar acc = pb[j];
      for (std::size_t k = 0; k < H; ++k) acc += pw(j, k) * st->first_hidden[k];
      st->pooled[j] = std::tanh(acc);
    }
  }
  if (drop) st->head_mask = dropout_mask(H, p, rng);
  st->head_input = st->pooled;
  for (std::size_t j = 0; j < st->head_mask.size(); ++j) st->head_input[j] *= st->head_mask[j];

  const Scalar* hw = ptr(slots_.head_w);
  Scalar logit = *ptr(slots_.head_b);
  for (std::size_t j = 0; j < H; ++j) logit += hw[j] * st->head_input[j];

  if (out) *out = std::move(st);
  return logit;
}

void TransformerClassifier::backward(const ForwardState& state, Scalar g,
                                     MatrixView d_emb,
                                     std::span<Scalar> dP) const {
  const auto& st = dynamic_cast<const TransformerState&>(state);
  const std::size_t T = st.length;
  const std::size_t H = shape_.hidden;
  const std::size_t A = shape_.heads;
  const std::size_t D = H / A;
  const std::size_t I = shape_.intermediate;
  const bool params = !dP.empty();
  auto P = parameters();
  auto view = [&](std::size_t slot) { return slot_view(P, layout_.slot(slot)); };
  auto ptr = [&](std::size_t slot) { return P.data() + layout_.slot(slot).offset; };
  std::vector<Scalar> sink(std::max(H, I) * 2, 0.0);
  auto gptr = [&](std::size_t slot, int which = 0) -> Scalar* {
    if (params) return dP.data() + layout_.slot(slot).offset;
    return sink.data() + which * std::max(H, I);
  };
  auto gview = [&](std::size_t slot) { return slot_view(dP, layout_.slot(slot)); };

  // Head and pooler.
  const Scalar* hw = ptr(slots_.head_w);
  std::vector<Scalar> d_pre(H);
  for (std::size_t j = 0; j < H; ++j) {
    Scalar dz = g * hw[j];
    if (!st.head_mask.empty()) dz *= st.head_mask[j];
    d_pre[j] = dz * (1.0 - st.pooled[j] * st.pooled[j]);
  }
  if (params) {
    Scalar* dhw = gptr(slots_.head_w);
    for (std::size_t j = 0; j < H; ++j) dhw[j] += g * st.head_input[j];
    *gptr(slots_.head_b) += g;
    MatrixView dpw = gview(slots_.pool_w);
    Scalar* dpb = gptr(slots_.pool_b);
    for (std::size_t j = 0; j < H; ++j) {
      dpb[j] += d_pre[j];
      for (std::size_t k = 0; k < H; ++k) dpw(j, k) += d_pre[j] * st.first_hidden[k];
    }
  }
  Matrix dx(T, H);
  {
    ConstMatrixView pw = view(slots_.pool_w);
    for (std::size_t j = 0; j < H; ++j) {
      for (std::size_t k = 0; k < H; ++k) dx(0, k) += d_pre[j] * pw(j, k);
    }
  }

  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(D));
  for (std::size_t b = slots_.blocks.size(); b-- > 0;) {
    const BlockSlots& bs = slots_.blocks[b];
    const BlockCache& c = st.blocks[b];

    Matrix dr2(T, H);
    kernels::layer_norm_backward(dx, c.ln2_xhat, c.ln2_inv, ptr(bs.ln2_g), dr2,
                                 gptr(bs.ln2_g, 0), gptr(bs.ln2_b, 1));
    Matrix df = dr2;
    apply_mask(df, c.ffn_mask);
    if (params) {
      kernels::matmul_tn_acc(df, c.ffn_act, gview(bs.ff2_w));
      kernels::column_sums_acc(df, gptr(bs.ff2_b));
    }
    Matrix dpre(T, I);
    kernels::matmul_nn(df, view(bs.ff2_w), dpre);
    {
      auto d = dpre.flat();
      auto pre = c.ffn_pre.flat();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= gelu_grad(pre[i]);
    }
    if (params) {
      kernels::matmul_tn_acc(dpre, c.ln1_out, gview(bs.ff1_w));
      kernels::column_sums_acc(dpre, gptr(bs.ff1_b));
    }
    Matrix dx1(T, H);
    kernels::matmul_nn(dpre, view(bs.ff1_w), dx1);
    add_into(dx1, dr2);

    Matrix dr1(T, H);
    kernels::layer_norm_backward(dx1, c.ln1_xhat, c.ln1_inv, ptr(bs.ln1_g), dr1,
                                 gptr(bs.ln1_g, 0), gptr(bs.ln1_b, 1));
    Matrix dao = dr1;
    apply_mask(dao, c.attn_mask);
    if (params) {
      kernels::matmul_tn_acc(dao, c.context, gview(bs.ao_w));
      kernels::column_sums_acc(dao, gptr(bs.ao_b));
    }
    Matrix dctx(T, H);
    kernels::matmul_nn(dao, view(bs.ao_w), dctx);

    Matrix dq(T, H), dk(T, H), dv(T, H);
    Matrix dprob(T, T);
    for (std::size_t h = 0; h < A; ++h) {
      const Matrix& prob = c.probs[h];
      ConstMatrixView dctx_h = dctx.view().columns(h * D, D);
      kernels::matmul_nt(dctx_h, c.v.view().columns(h * D, D), nullptr, dprob);
      kernels::matmul_tn_acc(prob, dctx_h, dv.view().columns(h * D, D));
      for (std::size_t i = 0; i < T; ++i) {
        Scalar dot = 0.0;
        for (std::size_t j = 0; j < T; ++j) dot += dprob(i, j) * prob(i, j);
        for (std::size_t j = 0; j < T; ++j) {
          dprob(i, j) = prob(i, j) * (dprob(i, j) - dot) * scale;
        }
      }
      kernels::matmul_nn(dprob, c.k.view().columns(h * D, D),
                         dq.view().columns(h * D, D));
      kernels::matmul_tn_acc(dprob, c.q.view().columns(h * D, D),
                             dk.view().columns(h * D, D));
    }
    if (params) {
      kernels::matmul_tn_acc(dq, c.input, gview(bs.q_w));
      kernels::column_sums_acc(dq, gptr(bs.q_b));
      kernels::matmul_tn_acc(dk, c.input, gview(bs.k_w));
      kernels::column_sums_acc(dk, gptr(bs.k_b));
      kernels::matmul_tn_acc(dv, c.input, gview(bs.v_w));
      kernels::column_sums_acc(dv, gptr(bs.v_b));
    }
    Matrix tmp(T, H);
    dx = dr1;
    kernels::matmul_nn(dq, view(bs.q_w), tmp);
    add_into(dx, tmp);
    kernels::matmul_nn(dk, view(bs.k_w), tmp);
    add_into(dx, tmp);
    kernels::matmul_nn(dv, view(bs.v_w), tmp);
    add_into(dx, tmp);
  }

  apply_mask(dx, st.emb_mask);
  Matrix de(T, H);
  kernels::layer_norm_backward(dx, st.emb_xhat, st.emb_inv, ptr(slots_.emb_ln_g),
                               de, gptr(slots_.emb_ln_g, 0), gptr(slots_.emb_ln_b, 1));
  if (params) {
    MatrixView dpos = gview(slots_.position);
    MatrixView dtype = gview(slots_.type);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < H; ++j) {
        dpos(t, j) += de(t, j);
        dtype(0, j) += de(t, j);
      }
    }
  }
  if (d_emb.data != nullptr) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy(de.row(t), de.row(t) + H, d_emb.row(t));
    }
  }
}

}  // namespace xoff
