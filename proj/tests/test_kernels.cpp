#include <gtest/gtest.h>

#include <cmath>
#include <omp.h>

#include "oracles/finite_difference.hpp"
#include "xoff/kernels.hpp"
#include "xoff/random.hpp"

using namespace xoff;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.flat()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Several threads even on a single core, so the parallel split is exercised.
class Kernels : public ::testing::Test {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(4);
  }
  void TearDown() override { omp_set_num_threads(saved_); }
  int saved_ = 1;
};

}  // namespace

TEST_F(Kernels, MatmulNtBitIdenticalAndMatchesNaive) {
  Rng rng(1);
  const Matrix a = random_matrix(70, 130, rng), b = random_matrix(90, 130, rng);
  std::vector<Scalar> bias(90);
  for (auto& v : bias) v = rng.normal();
  Matrix s(70, 90), p(70, 90);
  kernels::serial::matmul_nt(a, b, bias.data(), s);
  kernels::omp::matmul_nt(a, b, bias.data(), p);
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < 70; i += 7) {
    for (std::size_t j = 0; j < 90; j += 11) {
      long double acc = bias[j];
      for (std::size_t k = 0; k < 130; ++k) acc += static_cast<long double>(a(i, k)) * b(j, k);
      EXPECT_NEAR(s(i, j), static_cast<double>(acc), 1e-12);
    }
  }
}

TEST_F(Kernels, MatmulNnBitIdentical) {
  Rng rng(2);
  const Matrix a = random_matrix(80, 120, rng), b = random_matrix(120, 60, rng);
  Matrix s(80, 60), p(80, 60);
  kernels::serial::matmul_nn(a, b, s);
  kernels::omp::matmul_nn(a, b, p);
  EXPECT_EQ(s, p);
  long double acc = 0;
  for (std::size_t k = 0; k < 120; ++k) acc += static_cast<long double>(a(5, k)) * b(k, 9);
  EXPECT_NEAR(s(5, 9), static_cast<double>(acc), 1e-12);
}

TEST_F(Kernels, MatmulTnAccumulatesBitIdentical) {
  Rng rng(3);
  const Matrix a = random_matrix(150, 64, rng), b = random_matrix(150, 48, rng);
  Matrix s = random_matrix(64, 48, rng);
  Matrix p = s;
  const Matrix start = s;
  kernels::serial::matmul_tn_acc(a, b, s);
  kernels::omp::matmul_tn_acc(a, b, p);
  EXPECT_EQ(s, p);
  long double acc = start(3, 4);
  for (std::size_t i = 0; i < 150; ++i) acc += static_cast<long double>(a(i, 3)) * b(i, 4);
  EXPECT_NEAR(s(3, 4), static_cast<double>(acc), 1e-12);
}

TEST_F(Kernels, StridedColumnViews) {
  Rng rng(4);
  const Matrix a = random_matrix(40, 96, rng), b = random_matrix(50, 96, rng);
  Matrix wide(40, 100, 7.0), dense(40, 32);
  const ConstMatrixView bs = b.view().columns(32, 32).rows_range(0, 32);
  kernels::omp::matmul_nt(a.view().columns(32, 32), bs, nullptr, wide.view().columns(10, 32));
  kernels::serial::matmul_nt(a.view().columns(32, 32), bs, nullptr, dense);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_EQ(wide(i, 9), 7.0);
    for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(wide(i, 10 + j), dense(i, j));
  }
}

TEST_F(Kernels, SoftmaxRows) {
  Rng rng(5);
  Matrix s = random_matrix(300, 40, rng);
  for (auto& v : s.flat()) v *= 30.0;
  Matrix p = s;
  const Matrix in = s;
  kernels::serial::softmax_rows(s);
  kernels::omp::softmax_rows(p);
  EXPECT_EQ(s, p);
  for (std::size_t i = 0; i < 300; i += 13) {
    double sum = 0, denom = 0;
    for (std::size_t j = 0; j < 40; ++j) denom += std::exp(in(i, j) - in(i, 0));
    for (std::size_t j = 0; j < 40; ++j) {
      sum += s(i, j);
      EXPECT_NEAR(s(i, j), std::exp(in(i, j) - in(i, 0)) / denom, 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST_F(Kernels, LayerNormMatchesFormula) {
  Rng rng(6);
  const Matrix x = random_matrix(200, 48, rng);
  std::vector<Scalar> g(48), b(48);
  for (auto& v : g) v = rng.uniform(0.5, 1.5);
  for (auto& v : b) v = rng.normal();
  Matrix o1(200, 48), h1(200, 48), o2(200, 48), h2(200, 48);
  std::vector<Scalar> i1(200), i2(200);
  kernels::serial::layer_norm(x, g.data(), b.data(), 1e-12, o1, h1, i1);
  kernels::omp::layer_norm(x, g.data(), b.data(), 1e-12, o2, h2, i2);
  EXPECT_EQ(o1, o2);
  EXPECT_EQ(h1, h2);
  EXPECT_EQ(i1, i2);
  for (std::size_t r = 0; r < 200; r += 17) {
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < 48; ++j) mean += x(r, j) / 48.0;
    for (std::size_t j = 0; j < 48; ++j) var += (x(r, j) - mean) * (x(r, j) - mean) / 48.0;
    for (std::size_t j = 0; j < 48; ++j) {
      EXPECT_NEAR(o1(r, j), (x(r, j) - mean) / std::sqrt(var + 1e-12) * g[j] + b[j], 1e-12);
    }
  }
}

TEST_F(Kernels, LayerNormBackwardMatchesFiniteDifferences) {
  Rng rng(7);
  Matrix x = random_matrix(3, 8, rng);
  const Matrix dy = random_matrix(3, 8, rng);
  std::vector<Scalar> g(8), b(8);
  for (auto& v : g) v = rng.uniform(0.5, 1.5);
  for (auto& v : b) v = rng.normal();
  auto loss = [&] {
    Matrix o(3, 8), h(3, 8);
    std::vector<Scalar> inv(3);
    kernels::serial::layer_norm(x, g.data(), b.data(), 1e-5, o, h, inv);
    double s = 0;
    for (std::size_t i = 0; i < 24; ++i) s += o.flat()[i] * dy.flat()[i];
    return s;
  };
  Matrix o(3, 8), h(3, 8), dx(3, 8);
  std::vector<Scalar> inv(3), dg(8, 0.0), db(8, 0.0);
  kernels::serial::layer_norm(x, g.data(), b.data(), 1e-5, o, h, inv);
  kernels::layer_norm_backward(dy, h, inv, g.data(), dx, dg.data(), db.data());
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double num = oracle::central_difference(loss, x(r, j), 1e-6);
      EXPECT_LT(oracle::relative_error(dx(r, j), num), 1e-6);
    }
  }
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_LT(oracle::relative_error(dg[j], oracle::central_difference(loss, g[j], 1e-6)), 1e-6);
    EXPECT_LT(oracle::relative_error(db[j], oracle::central_difference(loss, b[j], 1e-6)), 1e-6);
  }
}

TEST_F(Kernels, ColumnSums) {
  Matrix x(3, 2);
  x(0, 0) = 1, x(1, 0) = 2, x(2, 0) = 3, x(0, 1) = -1, x(1, 1) = 0.5, x(2, 1) = 0.25;
  std::vector<Scalar> out = {10.0, 0.0};
  kernels::column_sums_acc(x, out.data());
  EXPECT_EQ(out, (std::vector<Scalar>{16.0, -0.25}));
}
