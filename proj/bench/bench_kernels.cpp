// Serial vs OpenMP throughput of the data-parallel kernels. The thread count comes from
// OMP_NUM_THREADS / BAYESGAM_THREADS as usual; on one core the two variants should match.

#include "bayesgam/gpbasis.hpp"
#include "bayesgam/kernels.hpp"
#include "bayesgam/linsys.hpp"
#include "bayesgam/localbasis.hpp"
#include "bayesgam/parallel.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace bayesgam;

namespace {

Points random_points(Index n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  Points p(n, 2);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

double sqexp(std::span<const double> a, std::span<const double> b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1];
  return std::exp(-(d0 * d0 + d1 * d1) / 0.02);
}

// Precision factor of a 2-D second-difference smoother on an n x n grid.
CholeskyFactor smoother_factor(Index n) {
  const Grid grid = Grid::uniform(0, 1, n);
  const Grid g2({grid.axis(0), grid.axis(0)});
  LinearGaussianSystem s;
  const Points knots = g2.knots();
  s.design = interpolation_matrix(g2, knots);
  s.obs = Vector::Zero(knots.rows());
  s.obs_var = Vector::Ones(knots.rows());
  const PriorBlock a = difference_operator(g2, 0, 2, 0.1).prior_block();
  const PriorBlock b = difference_operator(g2, 1, 2, 0.1).prior_block();
  SparseMatrix stacked(a.rows() + b.rows(), g2.size());
  std::vector<Triplet> trips;
  for (const auto* blk : {&a, &b}) {
    const Index off = blk == &a ? 0 : a.rows();
    for (Index c = 0; c < blk->transform.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(blk->transform, c); it; ++it) trips.emplace_back(off + it.row(), c, it.value());
  }
  stacked.setFromTriplets(trips.begin(), trips.end());
  s.prior_transform = stacked;
  s.prior_mean = Vector::Zero(stacked.rows());
  s.prior_var = Vector::Constant(stacked.rows(), 0.01);
  return CholeskyFactor::factorize(precision_matrix(s));
}

template <bool Parallel>
void BM_gram(benchmark::State& state) {
  const Points p = random_points(state.range(0));
  for (auto _ : state) {
    Matrix g = Parallel ? kernels::gram_matrix(p, sqexp) : kernels::serial::gram_matrix(p, sqexp);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <bool Parallel>
void BM_whiten(benchmark::State& state) {
  const CholeskyFactor f = smoother_factor(state.range(0));
  SparseMatrix cols(f.size(), 64);
  std::vector<Triplet> trips;
  for (Index c = 0; c < 64; ++c) trips.emplace_back((c * 37) % f.size(), c, 1.0);
  cols.setFromTriplets(trips.begin(), trips.end());
  for (auto _ : state) {
    Matrix w = Parallel ? kernels::whiten_columns(f.lower(), f.permutation(), cols)
                        : kernels::serial::whiten_columns(f.lower(), f.permutation(), cols);
    benchmark::DoNotOptimize(w.data());
  }
}

template <bool Parallel>
void BM_color(benchmark::State& state) {
  const CholeskyFactor f = smoother_factor(state.range(0));
  const Matrix z = Matrix::Random(f.size(), 256);
  for (auto _ : state) {
    Matrix x = Parallel ? kernels::color_columns(f.lower(), f.permutation(), z)
                        : kernels::serial::color_columns(f.lower(), f.permutation(), z);
    benchmark::DoNotOptimize(x.data());
  }
}

template <bool Parallel>
void BM_map(benchmark::State& state) {
  const Index n = state.range(0);
  auto work = [](Index i) {
    double acc = 0;
    for (int k = 0; k < 2000; ++k) acc += std::sin(static_cast<double>(i + k));
    return acc;
  };
  for (auto _ : state) {
    auto v = Parallel ? kernels::map_indices<double>(n, work) : kernels::serial::map_indices<double>(n, work);
    benchmark::DoNotOptimize(v.data());
  }
}

}  // namespace

BENCHMARK(BM_gram<false>)->Name("gram/serial")->Arg(200)->Arg(800);
BENCHMARK(BM_gram<true>)->Name("gram/parallel")->Arg(200)->Arg(800);
BENCHMARK(BM_whiten<false>)->Name("whiten/serial")->Arg(30)->Arg(60);
BENCHMARK(BM_whiten<true>)->Name("whiten/parallel")->Arg(30)->Arg(60);
BENCHMARK(BM_color<false>)->Name("color/serial")->Arg(30)->Arg(60);
BENCHMARK(BM_color<true>)->Name("color/parallel")->Arg(30)->Arg(60);
BENCHMARK(BM_map<false>)->Name("map_indices/serial")->Arg(256);
BENCHMARK(BM_map<true>)->Name("map_indices/parallel")->Arg(256);

int main(int argc, char** argv) {
  set_thread_count(resolve_thread_count(std::nullopt));
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
