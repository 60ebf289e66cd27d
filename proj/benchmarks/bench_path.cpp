#include <benchmark/benchmark.h>

#include <random>

#include "qpath/evaluate.hpp"
#include "qpath/path.hpp"
#include "qpath/recover.hpp"
#include "qpath/solver.hpp"

namespace {

using namespace qpath;

Dataset logistic_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  return augment_bias(generate_synthetic(spec, n).data);
}

void BM_TracePath(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double lambda = state.range(1) == 0 ? 1e-2 : 1e-4;
  const Dataset ds = logistic_data(n, 2, 7);
  std::size_t kinks = 0;
  for (auto _ : state) {
    const KinkPath path = trace_path(ds, lambda);
    kinks = path.kinks.size();
    benchmark::DoNotOptimize(kinks);
  }
  state.counters["kinks"] = static_cast<double>(kinks);
}
BENCHMARK(BM_TracePath)
    ->ArgsProduct({{100, 500, 2000}, {0, 1}})
    ->ArgNames({"n", "small_lambda"})
    ->Unit(benchmark::kMillisecond);

void BM_RecoverAt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = logistic_data(n, 5, 11);
  const KinkPath path = trace_path(ds, 1e-2);
  const PathRecovery rec(path);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto _ : state) {
    const PrimalModel m = rec.primal_at(ds, unit(rng));
    benchmark::DoNotOptimize(m.w.data());
  }
  state.counters["kinks"] = static_cast<double>(path.kinks.size());
}
BENCHMARK(BM_RecoverAt)->Arg(200)->Arg(2000)->ArgName("n")->Unit(benchmark::kMicrosecond);

void BM_BoxQPCold(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double lambda = 1e-2;
  const Dataset ds = logistic_data(n, 5, 11);
  const QOperator q(ds);
  const CostSchedule sched(n, lambda);
  const Vector upper = sched.upper_bounds(ds.labels(), 0.3);
  const Costs c = sched.at(0.3);
  const double tol = default_box_qp_tol(n, c.plus, c.minus);
  for (auto _ : state) {
    const BoxQPResult r = solve_box_qp(q, lambda, upper, tol, 100000);
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK(BM_BoxQPCold)->Arg(200)->Arg(2000)->ArgName("n")->Unit(benchmark::kMicrosecond);

void BM_QApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dataset ds = logistic_data(n, 20, 3);
  const QOperator q(ds);
  const Vector v(n, 0.5);
  for (auto _ : state) {
    const Vector out = q.apply(v);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_QApply)->Arg(1000)->Arg(10000)->ArgName("n");

}  // namespace
BENCHMARK_MAIN();
