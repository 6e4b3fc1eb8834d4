#include <benchmark/benchmark.h>

#include "extval/balancer.hpp"
#include "extval/glm.hpp"
#include "extval/metrics.hpp"
#include "extval/rng.hpp"
#include "extval/simulator.hpp"
#include "extval/transform.hpp"

using namespace extval;

namespace {

// Balancing instance shaped like the synthetic study: per-class first and
// second moments plus prevalence over p features.
void makeInstance(Eigen::Index n, int p, TransformedMatrix& z, MomentTarget& t) {
    sim::SemConfig cfg;
    cfg.p = p;
    cfg.sigmaXAH = 0.5;
    cfg.seed = 1;
    sim::SemCoefficients model = sim::sampleCoefficients(cfg);
    Sample internal = sim::generate(model, n, 0, 2);
    Sample external = sim::generate(model, n, 1, 3);
    TransformSpec spec = TransformSpec::perClassMoments(internal.featureNames);
    z = applyTransforms(internal, spec);
    MomentTarget raw = statsFromSample(external, spec);
    PrunedInputs pruned = pruneLowVarianceColumns(z, raw, 1e-4);
    z = pruned.z;
    t = pruned.target;
}

void BM_solveExact(benchmark::State& state) {
    TransformedMatrix z;
    MomentTarget t;
    makeInstance(state.range(0), 10, z, t);
    for (auto _ : state) {
        balancer::WeightSolution sol = balancer::solveExact(z, t);
        benchmark::DoNotOptimize(sol.klDivergence);
    }
}
BENCHMARK(BM_solveExact)->Arg(1000)->Arg(10000);

void BM_solveRelaxed(benchmark::State& state) {
    TransformedMatrix z;
    MomentTarget t;
    makeInstance(state.range(0), 10, z, t);
    t.values[0] += 5.0;  // force the mirror-descent path
    for (auto _ : state) {
        balancer::WeightSolution sol = balancer::solveRelaxed(z, t);
        benchmark::DoNotOptimize(sol.residualNorm);
    }
}
BENCHMARK(BM_solveRelaxed)->Arg(1000);

void BM_weightedAuc(benchmark::State& state) {
    Eigen::Index n = state.range(0);
    rng::Stream s(7, 0x62656eULL, 0);
    metrics::ScoredSample sc;
    sc.scores.resize(n);
    sc.outcomes.resize(n);
    sc.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sc.scores[i] = s.uniform();
        sc.outcomes[i] = s.uniform() < 0.5 ? 0.0 : 1.0;
        sc.weights[i] = 1.0 / static_cast<double>(n);
    }
    sc.outcomes[0] = 0.0;
    sc.outcomes[n - 1] = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(metrics::weightedAuc(sc));
}
BENCHMARK(BM_weightedAuc)->Arg(1000)->Arg(100000);

void BM_glmTrain(benchmark::State& state) {
    sim::SemConfig cfg;
    cfg.p = 10;
    cfg.sigmaXAH = 0.0;
    cfg.seed = 5;
    Sample s = sim::generate(sim::sampleCoefficients(cfg), state.range(0), 0, 6);
    for (auto _ : state) {
        glm::LinearModel m = glm::train(s);
        benchmark::DoNotOptimize(m.intercept);
    }
}
BENCHMARK(BM_glmTrain)->Arg(1000)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
