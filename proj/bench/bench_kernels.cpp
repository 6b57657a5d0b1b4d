#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

#include "varplane/field_grid.hpp"
#include "varplane/maximal_ops.hpp"
#include "varplane/oscillatory_lab.hpp"
#include "varplane/rng.hpp"

using namespace vp;

namespace {

const DiscretizedOperator& op_for(double lambda) {
    static std::map<double, DiscretizedOperator> cache;
    auto it = cache.find(lambda);
    if (it == cache.end()) {
        OperatorConfig c;
        c.a = Matrix2::ic(1);
        c.lambda = lambda;
        it = cache.emplace(lambda, DiscretizedOperator(c)).first;
    }
    return it->second;
}

cvec input(const DiscretizedOperator& op) {
    KeyedRng rng(1, 1);
    cvec g(op.input_size());
    for (auto& z : g) z = {rng.normal(), rng.normal()};
    return g;
}

void BM_apply(benchmark::State& st) {
    const auto& op = op_for(static_cast<double>(st.range(0)));
    const cvec g = input(op);
    cvec out;
    for (auto _ : st) {
        op.apply(g, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_apply_serial(benchmark::State& st) {
    const auto& op = op_for(static_cast<double>(st.range(0)));
    const cvec g = input(op);
    cvec out;
    for (auto _ : st) {
        op.apply_serial(g, out);
        benchmark::DoNotOptimize(out.data());
    }
}

struct MaximalCase {
    ScalarField3 f;
    Grid3 eval;
    MaximalCase() {
        Grid3 g;
        g.half_extent = {3, 3, 3};
        g.points = {49, 49, 49};
        f = ScalarField3::from_function(g, [](double x, double y, double z) { return std::exp(-x * x - y * y - z * z); });
        eval.half_extent = {0.5, 0.5, 0.5};
        eval.points = {6, 6, 6};
    }
};

const MaximalCase& maximal_case() {
    static const MaximalCase c;
    return c;
}

void BM_annulus_maximal(benchmark::State& st) {
    const auto& c = maximal_case();
    for (auto _ : st) benchmark::DoNotOptimize(annulus_maximal(c.f, Matrix2::ic(1), 0.0625, DilationSet::geometric(16), c.eval));
}

void BM_annulus_maximal_serial(benchmark::State& st) {
    const auto& c = maximal_case();
    for (auto _ : st)
        benchmark::DoNotOptimize(annulus_maximal_serial(c.f, Matrix2::ic(1), 0.0625, DilationSet::geometric(16), c.eval));
}

void BM_sublevel(benchmark::State& st) {
    const Matrix2 m{1, 0.5, 0.5, -2};
    for (auto _ : st) benchmark::DoNotOptimize(sublevel_measure(m, 1e-2, 1 << 20, 3));
}

void BM_sublevel_serial(benchmark::State& st) {
    const Matrix2 m{1, 0.5, 0.5, -2};
    for (auto _ : st) benchmark::DoNotOptimize(sublevel_measure_serial(m, 1e-2, 1 << 20, 3));
}

}  // namespace

BENCHMARK(BM_apply)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_apply_serial)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_annulus_maximal)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_annulus_maximal_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_sublevel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_sublevel_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
