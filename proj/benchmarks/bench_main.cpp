#include <benchmark/benchmark.h>

#include "rnamf/active_learning.hpp"
#include "rnamf/problems.hpp"

using namespace rnamf;

namespace {

MultiFidelityDataset dataset(const char* name) {
  const auto p = problem_by_name(name);
  return make_dataset(p, nested_design(p.default_sizes, p.dim, 1), {});
}

RnaEmulator fitted(const MultiFidelityDataset& data, KernelKind kind) {
  FitOptions opt;
  opt.restarts = 2;
  return RnaEmulator::fit(data, kind, opt);
}

const char* problem_arg(std::int64_t i) {
  static const char* names[] = {"perdikaris", "currin", "borehole", "branin"};
  return names[i];
}

void BM_Predict(benchmark::State& state) {
  const auto data = dataset(problem_arg(state.range(0)));
  const auto emu = fitted(data, static_cast<KernelKind>(state.range(1)));
  const Eigen::VectorXd x = data.bounds->from_unit(Eigen::VectorXd::Constant(data.dim, 0.37));
  for (auto _ : state) benchmark::DoNotOptimize(emu.predict(x, emu.levels()));
  state.SetLabel(problem_arg(state.range(0)));
}
BENCHMARK(BM_Predict)->ArgsProduct({{0, 1, 2, 3}, {0, 2}});

void BM_Fit(benchmark::State& state) {
  const auto data = dataset(problem_arg(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fitted(data, KernelKind::SqExp));
  state.SetLabel(problem_arg(state.range(0)));
}
BENCHMARK(BM_Fit)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_VarianceDecomposition(benchmark::State& state) {
  const auto data = dataset(problem_arg(state.range(0)));
  const auto emu = fitted(data, KernelKind::SqExp);
  const Eigen::VectorXd x = data.bounds->from_unit(Eigen::VectorXd::Constant(data.dim, 0.61));
  for (auto _ : state) benchmark::DoNotOptimize(emu.variance_decomposition(x, 2000));
  state.SetLabel(problem_arg(state.range(0)));
}
BENCHMARK(BM_VarianceDecomposition)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_AlcCriterion(benchmark::State& state) {
  const auto data = dataset("currin");
  const auto emu = fitted(data, KernelKind::SqExp);
  const AlcContext ctx(emu, *data.bounds, AlcOptions{static_cast<int>(state.range(0)), 20, 1});
  const CostModel costs(data.costs);
  const Eigen::Vector2d x(0.31, 0.77);
  for (auto _ : state) benchmark::DoNotOptimize(alc_criterion(ctx, x, 2, costs));
}
BENCHMARK(BM_AlcCriterion)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
