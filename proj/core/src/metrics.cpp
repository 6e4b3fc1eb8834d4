#include "extval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "extval/parallel.hpp"
#include "extval/rng.hpp"

namespace extval::metrics {

namespace {

constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;  // "boot"

void checkTwoClasses(const ScoredSample& s) {
    double w1 = 0.0, w0 = 0.0;
    for (Eigen::Index i = 0; i < s.outcomes.size(); ++i)
        (s.outcomes[i] == 1.0 ? w1 : w0) += s.weights[i];
    if (!(w1 > 0.0) || !(w0 > 0.0))
        throw std::invalid_argument("AUC undefined: both classes need positive weight");
}

// Linear-interpolation empirical quantile, q in [0, 1].
double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty set");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void ScoredSample::validate() const {
    if (scores.size() != outcomes.size() || scores.size() != weights.size())
        throw std::invalid_argument("scores/outcomes/weights lengths differ");
    if (scores.size() == 0) throw std::invalid_argument("empty scored sample");
    if (weights.minCoeff() < 0.0) throw std::invalid_argument("negative weight");
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (!(scores[i] >= 0.0 && scores[i] <= 1.0))
            throw std::invalid_argument("score outside [0, 1]");
        if (outcomes[i] != 0.0 && outcomes[i] != 1.0)
            throw std::invalid_argument("outcome not binary");
    }
    if (std::abs(weights.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("weights must sum to 1");
}

const char* metricName(Metric m) {
    switch (m) {
        case Metric::Auc: return "auc";
        case Metric::LogLoss: return "logloss";
        case Metric::Brier: return "brier";
    }
    return "?";
}

double weightedAuc(const ScoredSample& s) {
    checkTwoClasses(s);
    const Eigen::Index n = s.scores.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return s.scores[a] < s.scores[b]; });

    double w1 = 0.0, w0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) (s.outcomes[i] == 1.0 ? w1 : w0) += s.weights[i];

    // Sweep in score order; within a tie group positives see all negatives
    // below the group fully and the group's own negatives at half credit.
    double concordant = 0.0;
    double negBelow = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double groupPos = 0.0, groupNeg = 0.0;
        while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
            (s.outcomes[order[j]] == 1.0 ? groupPos : groupNeg) += s.weights[order[j]];
            ++j;
        }
        concordant += groupPos * negBelow + 0.5 * groupPos * groupNeg;
        negBelow += groupNeg;
        i = j;
    }
    return concordant / (w1 * w0);
}

double weightedAucNaive(const ScoredSample& s) {
    checkTwoClasses(s);
    const Eigen::Index n = s.scores.size();
    double w1 = 0.0, w0 = 0.0, num = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (s.outcomes[i] != 1.0) continue;
        w1 += s.weights[i];
        for (Eigen::Index j = 0; j < n; ++j) {
            if (s.outcomes[j] == 1.0) continue;
            if (s.scores[i] > s.scores[j])
                num += s.weights[i] * s.weights[j];
            else if (s.scores[i] == s.scores[j])
                num += 0.5 * s.weights[i] * s.weights[j];
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        if (s.outcomes[j] != 1.0) w0 += s.weights[j];
    return num / (w1 * w0);
}

double expectedPointwiseLoss(const ScoredSample& s, PointwiseLoss loss) {
    s.validate();
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.scores.size(); ++i) {
        double y = s.outcomes[i];
        if (loss == PointwiseLoss::Brier) {
            double e = s.scores[i] - y;
            total += s.weights[i] * e * e;
        } else {
            double p = std::clamp(s.scores[i], 1e-15, 1.0 - 1e-15);
            total += s.weights[i] * (-(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)));
        }
    }
    return total;
}

namespace {

double metricValue(Metric metric, const ScoredSample& s) {
    switch (metric) {
        case Metric::Auc: return weightedAuc(s);
        case Metric::LogLoss: return expectedPointwiseLoss(s, PointwiseLoss::NegLogLikelihood);
        case Metric::Brier: return expectedPointwiseLoss(s, PointwiseLoss::Brier);
    }
    throw std::invalid_argument("unknown metric");
}

}  // namespace

MetricEstimate bootstrapCI(const Sample& sample, const TransformSpec& spec,
                           const MomentTarget& target, const Eigen::VectorXd& scores,
                           Metric metric, int replicates, std::uint64_t seed,
                           const balancer::SolverConfig& cfg, int threads) {
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (scores.size() != sample.n())
        throw std::invalid_argument("scores length does not match sample rows");

    const Eigen::Index n = sample.n();

    auto solveAndScore = [&](const Sample& smp, const Eigen::VectorXd& sc) {
        TransformedMatrix z = applyTransforms(smp, spec);
        PrunedInputs pruned = pruneLowVarianceColumns(z, target, cfg.sdCutoff);
        balancer::WeightSolution sol = balancer::solve(pruned.z, pruned.target, cfg);
        ScoredSample scored{sc, smp.outcomes, sol.weights};
        return metricValue(metric, scored);
    };

    MetricEstimate est;
    est.metric = metric;
    est.value = solveAndScore(sample, scores);
    est.bootstrapReplicates = replicates;

    std::vector<double> values(static_cast<std::size_t>(replicates),
                               std::numeric_limits<double>::quiet_NaN());
    parallelFor(static_cast<std::size_t>(replicates), threads, [&](std::size_t rep) {
        rng::Stream stream(seed, kBootstrapStream, rep);
        Sample boot;
        boot.features.resize(n, sample.p());
        boot.outcomes.resize(n);
        boot.featureNames = sample.featureNames;
        Eigen::VectorXd bootScores(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index pick =
                static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n)));
            boot.features.row(i) = sample.features.row(pick);
            boot.outcomes[i] = sample.outcomes[pick];
            bootScores[i] = scores[pick];
        }
        try {
            values[rep] = solveAndScore(boot, bootScores);
        } catch (const std::exception&) {
            // left as NaN; counted as a failed replicate below
        }
    });

    std::vector<double> ok;
    ok.reserve(values.size());
    for (double v : values)
        if (std::isfinite(v)) ok.push_back(v);
    est.failedReplicates = replicates - static_cast<int>(ok.size());
    if (est.failedReplicates * 10 > replicates)
        throw std::runtime_error("more than 10% of bootstrap replicates failed (" +
                                 std::to_string(est.failedReplicates) + "/" +
                                 std::to_string(replicates) + ")");
    est.ciLower = quantile(ok, 0.025);
    est.ciUpper = quantile(ok, 0.975);
    return est;
}

}  // namespace extval::metrics
