#include <benchmark/benchmark.h>

#include <omp.h>

#include "acpkan/kernels.hpp"
#include "acpkan/rankdiag.hpp"
#include "acpkan/train.hpp"

using namespace acpkan;

namespace {

struct Fixture {
  PdeProblem problem;
  std::unique_ptr<Network> model;
  std::vector<double> params;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    TrainConfig c;
    c.problem_options.grid = 11;
    c.problem_options.eval_grid = 41;
    Fixture out{make_problem("reaction", c.problem_options), nullptr, {}};
    out.model = make_model(c, 2);
    const auto v = out.model->parameters().values();
    out.params.assign(v.begin(), v.end());
    return out;
  }();
  return f;
}

void BM_ResidualSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& term = f.problem.terms[0];
  std::vector<double> w(term.residual_count(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_term_serial(*f.model, f.params, term, w, 0.0));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(term.points.size()));
}

void BM_ResidualParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto& term = f.problem.terms[0];
  std::vector<double> w(term.residual_count(), 1.0);
  const auto shard = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_term_parallel(*f.model, f.params, term, w, 0.0, shard));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(term.points.size()));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_PredictSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_points_serial(*f.model, f.problem.reference->points));
}

void BM_PredictParallel(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_points(*f.model, f.problem.reference->points));
}

// one Chebyshev layer at second order, fused contraction vs plain jet arithmetic
template <bool Fused>
void BM_ChebyLayer(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  Rng rng(0);
  const std::vector<int> widths{width, width};
  const ChebyStack stack = ChebyStack::random(widths, 8, rng);
  const auto& layer = stack.layers()[0];
  std::vector<double> x(static_cast<std::size_t>(width));
  for (auto& v : x) v = rng.normal();
  Tape tape;
  for (auto _ : state) {
    tape.clear();
    const auto p = bind_parameters(tape, stack.parameters().values());
    const Jet a = jet_input(tape, 0.3, 0, 2), b = jet_input(tape, -0.4, 1, 2);
    std::vector<Jet> in;
    for (int i = 0; i < width; ++i) in.push_back(a * x[static_cast<std::size_t>(i)] + b);
    auto y = Fused ? layer.forward(p, in) : layer.forward_reference(p, in);
    benchmark::DoNotOptimize(y);
    tape.backward(y[0].hess[0]);
  }
}

}  // namespace

BENCHMARK(BM_ResidualSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResidualParallel)->Arg(4)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_ChebyLayer, true)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_ChebyLayer, false)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
