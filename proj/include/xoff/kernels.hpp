#pragma once

#include <span>

#include "xoff/tensor.hpp"

// Dense kernels behind the encoders. Each kernel exists twice: a serial
// reference in `serial` and an OpenMP version in `omp`. The OpenMP versions
// split work by output rows only, so every output element is reduced in the
// same order as the serial version and results are bit-identical regardless
// of the thread count.
namespace xoff::kernels {

// Work (multiply-adds) below which the OpenMP versions stay serial.
inline constexpr std::size_t kParallelWorkThreshold = 1 << 15;

namespace serial {

// out = a * b^T (+ bias broadcast over rows). a: m x k, b: n x k, out: m x n.
void matmul_nt(ConstMatrixView a, ConstMatrixView b, const Scalar* bias,
               MatrixView out);
// out = a * b. a: m x k, b: k x n.
void matmul_nn(ConstMatrixView a, ConstMatrixView b, MatrixView out);
// out += a^T * b. a: m x n, b: m x k, out: n x k.
void matmul_tn_acc(ConstMatrixView a, ConstMatrixView b, MatrixView out);
void softmax_rows(MatrixView x);
// Row-wise layer norm. Stores normalized inputs in `xhat` and 1/sigma per row.
void layer_norm(ConstMatrixView x, const Scalar* gamma, const Scalar* beta,
                Scalar eps, MatrixView out, MatrixView xhat,
                std::span<Scalar> inv_std);

}  // namespace serial

namespace omp {

void matmul_nt(ConstMatrixView a, ConstMatrixView b, const Scalar* bias,
               MatrixView out);
void matmul_nn(ConstMatrixView a, ConstMatrixView b, MatrixView out);
void matmul_tn_acc(ConstMatrixView a, ConstMatrixView b, MatrixView out);
void softmax_rows(MatrixView x);
void layer_norm(ConstMatrixView x, const Scalar* gamma, const Scalar* beta,
                Scalar eps, MatrixView out, MatrixView xhat,
                std::span<Scalar> inv_std);

}  // namespace omp

using omp::layer_norm;
using omp::matmul_nn;
using omp::matmul_nt;
using omp::matmul_tn_acc;
using omp::softmax_rows;

// Backward of layer_norm for one call: dx from dy, accumulating dgamma/dbeta.
void layer_norm_backward(ConstMatrixView dy, ConstMatrixView xhat,
                         std::span<const Scalar> inv_std, const Scalar* gamma,
                         MatrixView dx, Scalar* dgamma, Scalar* dbeta);

// Adds the column sums of `x` into `out`.
void column_sums_acc(ConstMatrixView x, Scalar* out);

}  // namespace xoff::kernels
