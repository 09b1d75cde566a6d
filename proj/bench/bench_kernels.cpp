// Serial reference kernels against their OpenMP counterparts, plus the
// model-level paths that use them.
#include <benchmark/benchmark.h>

#include "xoff/classifier.hpp"
#include "xoff/kernels.hpp"
#include "xoff/random.hpp"
#include "xoff/synthetic.hpp"

namespace {

using namespace xoff;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (auto& v : m.flat()) v = rng.normal();
  return m;
}

// Sequence length x hidden against a hidden x hidden weight, as in a projection.
template <auto Kernel>
void BM_MatmulNt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  const Matrix a = random_matrix(t, n, 1), b = random_matrix(n, n, 2);
  Matrix out(t, n);
  for (auto _ : state) {
    Kernel(a, b, nullptr, out);
    benchmark::DoNotOptimize(out.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t * n * n));
}
BENCHMARK(BM_MatmulNt<kernels::serial::matmul_nt>)->Name("matmul_nt/serial")
    ->Args({64, 64})->Args({256, 128})->Args({768, 128});
BENCHMARK(BM_MatmulNt<kernels::omp::matmul_nt>)->Name("matmul_nt/omp")
    ->Args({64, 64})->Args({256, 128})->Args({768, 128});

template <auto Kernel>
void BM_MatmulTnAcc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = static_cast<std::size_t>(state.range(1));
  const Matrix a = random_matrix(t, n, 3), b = random_matrix(t, n, 4);
  Matrix out(n, n);
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t * n * n));
}
BENCHMARK(BM_MatmulTnAcc<kernels::serial::matmul_tn_acc>)->Name("matmul_tn_acc/serial")
    ->Args({256, 128})->Args({768, 128});
BENCHMARK(BM_MatmulTnAcc<kernels::omp::matmul_tn_acc>)->Name("matmul_tn_acc/omp")
    ->Args({256, 128})->Args({768, 128});

template <auto Kernel>
void BM_LayerNorm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t t = 128;
  const Matrix x = random_matrix(t, n, 5);
  std::vector<Scalar> gamma(n, 1.0), beta(n, 0.0), inv(t);
  Matrix out(t, n), xhat(t, n);
  for (auto _ : state) {
    Kernel(x, gamma.data(), beta.data(), 1e-12, out, xhat, inv);
    benchmark::DoNotOptimize(out.flat().data());
  }
}
BENCHMARK(BM_LayerNorm<kernels::serial::layer_norm>)->Name("layer_norm/serial")->Arg(768);
BENCHMARK(BM_LayerNorm<kernels::omp::layer_norm>)->Name("layer_norm/omp")->Arg(768);

template <auto Kernel>
void BM_Softmax(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const Matrix x = random_matrix(t, t, 6);
  Matrix work(t, t);
  for (auto _ : state) {
    work = x;
    Kernel(work);
    benchmark::DoNotOptimize(work.flat().data());
  }
}
BENCHMARK(BM_Softmax<kernels::serial::softmax_rows>)->Name("softmax_rows/serial")->Arg(128);
BENCHMARK(BM_Softmax<kernels::omp::softmax_rows>)->Name("softmax_rows/omp")->Arg(128);

// One training-example gradient on the desk encoder.
void BM_DeskGradient(benchmark::State& state) {
  SyntheticOptions o;
  o.train_size = 8;
  const LanguageCorpus c = make_synthetic_corpus(Language::synthetic("a"), o);
  const Split* splits[] = {&c.train};
  const Vocabulary vocab = build_vocabulary(splits, false);
  ClassifierHandle h = build_classifier(ModelConfig::desk(), &vocab, 1);
  const auto ids = h.tokenizer->ids(c.train[0].text);
  std::vector<Scalar> grad(h.parameter_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(h.model->accumulate_gradient(ids, true, 7, 1.0, grad));
  }
}
BENCHMARK(BM_DeskGradient);

}  // namespace

BENCHMARK_MAIN();
