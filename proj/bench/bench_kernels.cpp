// Serial reference vs OpenMP kernels on random data.

#include <benchmark/benchmark.h>

#include <random>

#include "ltvid/kernels.hpp"

namespace {

using Eigen::MatrixXd;
using namespace ltvid::kernels;

MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    MatrixXd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = g(rng);
    return M;
}

// n = 4 states, m = 2 inputs.
template <ProxLossFn Fn>
void BM_ProxLoss(benchmark::State& state) {
    const Eigen::Index N = state.range(0);
    const MatrixXd phi = random_matrix(6, N, 1);
    const MatrixXd y = random_matrix(4, N, 2);
    const MatrixXd v = random_matrix(24, N, 3);
    MatrixXd out(24, N);
    for (auto _ : state) {
        Fn(phi, y, v, 1.0, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * N);
}

template <SegmentCostFn Fn>
void BM_SegmentCosts(benchmark::State& state) {
    const Eigen::Index N = state.range(0);
    const MatrixXd phi = random_matrix(3, N, 4);
    const MatrixXd y = random_matrix(2, N, 5);
    for (auto _ : state) {
        MatrixXd c = Fn(phi, y, 3);
        benchmark::DoNotOptimize(c.data());
    }
}

}  // namespace

BENCHMARK(BM_ProxLoss<serial::prox_loss>)->Name("prox_loss/serial")->Arg(1000)->Arg(100000);
BENCHMARK(BM_ProxLoss<omp::prox_loss>)->Name("prox_loss/omp")->Arg(1000)->Arg(100000);
BENCHMARK(BM_SegmentCosts<serial::segment_costs>)->Name("segment_costs/serial")->Arg(200)->Arg(800);
BENCHMARK(BM_SegmentCosts<omp::segment_costs>)->Name("segment_costs/omp")->Arg(200)->Arg(800);

BENCHMARK_MAIN();
