// Parallel kernels against the serial reference loops, at the shapes of one
// reconstruction step (n = 20 candidates, d = 100) for a range of p.

#include "rfrecon/kernels.hpp"
#include "rfrecon/recon.hpp"
#include "rfrecon/datagen.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace rfrecon;

namespace {

constexpr std::size_t kN = 20, kD = 100;

struct Operands {
  Matrix x, w, features;
  explicit Operands(std::size_t p) {
    RngStream rng(1);
    x = gaussian_matrix(rng, kN, kD, 1.0);
    w = gaussian_matrix(rng, p, kD, 0.1);
    features = gaussian_matrix(rng, kN, p, 1.0);
  }
};

// Pre-activations X W^T (n x p).
template <Matrix (*F)(const Matrix &, const Matrix &)> void BM_MatmulNt(benchmark::State &st) {
  const Operands op(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(F(op.x, op.w));
  st.SetItemsProcessed(st.iterations() * st.range(0) * kN * kD);
}

// Pullback C W (n x d).
template <Matrix (*F)(const Matrix &, const Matrix &)> void BM_Matmul(benchmark::State &st) {
  const Operands op(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(F(op.features, op.w));
  st.SetItemsProcessed(st.iterations() * st.range(0) * kN * kD);
}

// Gram of the features (n x n).
template <Matrix (*F)(const Matrix &)> void BM_Gram(benchmark::State &st) {
  const Operands op(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(F(op.features));
  st.SetItemsProcessed(st.iterations() * st.range(0) * kN * kN);
}

void BM_ReconLossAndGrad(benchmark::State &st) {
  const std::size_t p = static_cast<std::size_t>(st.range(0));
  const Dataset ds = synthetic_dataset(0, kN, kD);
  RngStream rng(2);
  const RFModel m = train_rf(gaussian_matrix(rng, p, kD, 0.1), Activation::relu(), ds.X, ds.Y);
  const ReconProblem pr = ReconProblem::from_rf(m, kN);
  const Matrix x = sphere_uniform(rng, kN, kD);
  for (auto _ : st) {
    const ReconLoss l = recon_loss(pr, x);
    benchmark::DoNotOptimize(recon_grad(pr, l));
  }
}

} // namespace

BENCHMARK(BM_MatmulNt<kernels::matmul_nt>)->Name("matmul_nt/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_MatmulNt<kernels::reference::matmul_nt>)->Name("matmul_nt/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Matmul<kernels::matmul>)->Name("matmul/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Matmul<kernels::reference::matmul>)->Name("matmul/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Gram<kernels::gram>)->Name("gram/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_Gram<kernels::reference::gram>)->Name("gram/reference")->Arg(2000)->Arg(20000);
BENCHMARK(BM_ReconLossAndGrad)->Name("recon_step/relu")->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
