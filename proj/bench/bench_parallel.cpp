// Serial reference vs OpenMP execution of the fan-out kernels.
#include "coneflow/builtins.hpp"
#include "coneflow/certify.hpp"
#include "coneflow/limitsets.hpp"
#include "coneflow/slowfast.hpp"

#include <benchmark/benchmark.h>

using namespace coneflow;

namespace {

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::Parallel : Execution::Serial; }

void label(benchmark::State& st) {
  st.SetLabel(st.range(0) ? "parallel(" + std::to_string(parallel_threads()) + " threads)" : "serial");
}

const BuiltinSystem& limit_system() {
  static const BuiltinSystem b = get_builtin("paper-3d-limit");
  return b;
}

void BM_GenericitySweep(benchmark::State& st) {
  const auto& b = limit_system();
  const BoundSystem F(b.sys, {});
  SweepOptions so;
  so.execution = mode(st);
  for (auto _ : st) {
    auto r = genericity_sweep(F, *b.box, 16, 42, so);
    benchmark::DoNotOptimize(r.closed_orbit);
  }
  label(st);
}

void BM_AlgebraicCertificate(benchmark::State& st) {
  const auto& b = limit_system();
  const BoundSystem F(b.sys, {});
  AlgebraicOptions ao;
  ao.execution = mode(st);
  for (auto _ : st) {
    auto r = algebraic_certificate(F, *b.cone, *b.box, 15, LambdaSpec::automatic(), ao);
    benchmark::DoNotOptimize(r.worst_margin);
  }
  label(st);
}

void BM_DynamicCertificate(benchmark::State& st) {
  const auto& b = limit_system();
  const BoundSystem F(b.sys, {});
  const auto pairs = random_pairs(*b.box, 8, 42);
  DynamicOptions dopt;
  dopt.execution = mode(st);
  for (auto _ : st) {
    auto r = dynamic_certificate(F, *b.cone, pairs, {0.1, 0.5, 1.0, 2.0, 5.0}, 64, 42, dopt);
    benchmark::DoNotOptimize(r.worst_margin);
  }
  label(st);
}

void BM_ManifoldCertification(benchmark::State& st) {
  const SlowFastSystem sf(get_builtin("paper-4d").sys, {{"eps", 0.05}});
  const Box slow = Box::symmetric(Vec::Constant(3, 4.0));
  for (auto _ : st) {
    auto r = certify_critical_manifold(sf, slow, 17, mode(st));
    benchmark::DoNotOptimize(r.mu_raw);
  }
  label(st);
}

}  // namespace

BENCHMARK(BM_GenericitySweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AlgebraicCertificate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DynamicCertificate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ManifoldCertification)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
