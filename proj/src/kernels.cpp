#include "xoff/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace xoff::kernels {

namespace {

// Row kernels shared by both variants; the variants differ only in how rows
// are distributed.

inline void matmul_nt_row(ConstMatrixView a, ConstMatrixView b,
                          const Scalar* bias, MatrixView out, std::size_t i) {
  const Scalar* ar = a.row(i);
  Scalar* o = out.row(i);
  for (std::size_t j = 0; j < b.rows; ++j) {
    const Scalar* br = b.row(j);
    Scalar acc = bias ? bias[j] : 0.0;
    for (std::size_t p = 0; p < a.cols; ++p) acc += ar[p] * br[p];
    o[j] = acc;
  }
}

inline void matmul_nn_row(ConstMatrixView a, ConstMatrixView b, MatrixView out,
                          std::size_t i) {
  Scalar* o = out.row(i);
  std::fill(o, o + out.cols, 0.0);
  const Scalar* ar = a.row(i);
  for (std::size_t p = 0; p < a.cols; ++p) {
    const Scalar aip = ar[p];
    if (aip == 0.0) continue;
    const Scalar* br = b.row(p);
    for (std::size_t j = 0; j < b.cols; ++j) o[j] += aip * br[j];
  }
}

// Row j of out += sum_i a(i, j) * b.row(i).
inline void matmul_tn_row(ConstMatrixView a, ConstMatrixView b, MatrixView out,
                          std::size_t j) {
  Scalar* o = out.row(j);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const Scalar aij = a(i, j);
    if (aij == 0.0) continue;
    const Scalar* br = b.row(i);
    for (std::size_t p = 0; p < b.cols; ++p) o[p] += aij * br[p];
  }
}

inline void softmax_row(MatrixView x, std::size_t i) {
  Scalar* r = x.row(i);
  const Scalar mx = *std::max_element(r, r + x.cols);
  Scalar sum = 0.0;
  for (std::size_t j = 0; j < x.cols; ++j) {
    r[j] = std::exp(r[j] - mx);
    sum += r[j];
  }
  const Scalar inv = 1.0 / sum;
  for (std::size_t j = 0; j < x.cols; ++j) r[j] *= inv;
}

inline void layer_norm_row(ConstMatrixView x, const Scalar* gamma,
                           const Scalar* beta, Scalar eps, MatrixView out,
                           MatrixView xhat, std::span<Scalar> inv_std,
                           std::size_t i) {
  const Scalar* r = x.row(i);
  const std::size_t n = x.cols;
  Scalar mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) mean += r[j];
  mean /= static_cast<Scalar>(n);
  Scalar var = 0.0;
  for (std::size_t j = 0; j < n; ++j) var += (r[j] - mean) * (r[j] - mean);
  var /= static_cast<Scalar>(n);
  const Scalar is = 1.0 / std::sqrt(var + eps);
  inv_std[i] = is;
  Scalar* h = xhat.row(i);
  Scalar* o = out.row(i);
  for (std::size_t j = 0; j < n; ++j) {
    h[j] = (r[j] - mean) * is;
    o[j] = h[j] * gamma[j] + beta[j];
  }
}

}  // namespace

namespace serial {

void matmul_nt(ConstMatrixView a, ConstMatrixView b, const Scalar* bias,
               MatrixView out) {
  for (std::size_t i = 0; i < a.rows; ++i) matmul_nt_row(a, b, bias, out, i);
}

void matmul_nn(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
  for (std::size_t i = 0; i < a.rows; ++i) matmul_nn_row(a, b, out, i);
}

void matmul_tn_acc(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
  for (std::size_t j = 0; j < a.cols; ++j) matmul_tn_row(a, b, out, j);
}

void softmax_rows(MatrixView x) {
  for (std::size_t i = 0; i < x.rows; ++i) softmax_row(x, i);
}

void layer_norm(ConstMatrixView x, const Scalar* gamma, const Scalar* beta,
                Scalar eps, MatrixView out, MatrixView xhat,
                std::span<Scalar> inv_std) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    layer_norm_row(x, gamma, beta, eps, out, xhat, inv_std, i);
  }
}

}  // namespace serial

namespace omp {

void matmul_nt(ConstMatrixView a, ConstMatrixView b, const Scalar* bias,
               MatrixView out) {
  const auto m = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * b.rows * a.cols > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) matmul_nt_row(a, b, bias, out, i);
}

void matmul_nn(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
  const auto m = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * b.rows * b.cols > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) matmul_nn_row(a, b, out, i);
}

void matmul_tn_acc(ConstMatrixView a, ConstMatrixView b, MatrixView out) {
  const auto n = static_cast<std::ptrdiff_t>(a.cols);
  const bool par = a.rows * a.cols * b.cols > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t j = 0; j < n; ++j) matmul_tn_row(a, b, out, j);
}

void softmax_rows(MatrixView x) {
  const auto m = static_cast<std::ptrdiff_t>(x.rows);
  const bool par = x.rows * x.cols > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) softmax_row(x, i);
}

void layer_norm(ConstMatrixView x, const Scalar* gamma, const Scalar* beta,
                Scalar eps, MatrixView out, MatrixView xhat,
                std::span<Scalar> inv_std) {
  const auto m = static_cast<std::ptrdiff_t>(x.rows);
  const bool par = x.rows * x.cols > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    layer_norm_row(x, gamma, beta, eps, out, xhat, inv_std, i);
  }
}

}  // namespace omp

void layer_norm_backward(ConstMatrixView dy, ConstMatrixView xhat,
                         std::span<const Scalar> inv_std, const Scalar* gamma,
                         MatrixView dx, Scalar* dgamma, Scalar* dbeta) {
  const std::size_t n = dy.cols;
  std::vector<Scalar> dh(n);
  for (std::size_t i = 0; i < dy.rows; ++i) {
    const Scalar* g = dy.row(i);
    const Scalar* h = xhat.row(i);
    Scalar sum_dh = 0.0;
    Scalar sum_dh_h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dgamma[j] += g[j] * h[j];
      dbeta[j] += g[j];
      dh[j] = g[j] * gamma[j];
      sum_dh += dh[j];
      sum_dh_h += dh[j] * h[j];
    }
    const Scalar scale = inv_std[i] / static_cast<Scalar>(n);
    Scalar* out = dx.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = scale * (static_cast<Scalar>(n) * dh[j] - sum_dh - h[j] * sum_dh_h);
    }
  }
}

void column_sums_acc(ConstMatrixView x, Scalar* out) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    const Scalar* r = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) out[j] += r[j];
  }
}

}  // namespace xoff::kernels
