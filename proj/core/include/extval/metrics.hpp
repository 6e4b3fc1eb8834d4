#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "extval/balancer.hpp"
#include "extval/sample.hpp"
#include "extval/transform.hpp"

namespace extval::metrics {

struct ScoredSample {
    Eigen::VectorXd scores;    // model outputs in [0, 1]
    Eigen::VectorXd outcomes;  // {0, 1}
    Eigen::VectorXd weights;   // simplex

    void validate() const;
};

enum class Metric { Auc, LogLoss, Brier };
enum class PointwiseLoss { NegLogLikelihood, Brier };

const char* metricName(Metric m);

// Weighted probability that a random positive outscores a random negative,
// ties counted half. Single sort, O(n log n).
double weightedAuc(const ScoredSample& s);

// Same contract by explicit O(n^2) pair enumeration. Test oracle.
double weightedAucNaive(const ScoredSample& s);

// sum_i w_i * l(s_i, y_i). Log-loss scores are clipped to [1e-15, 1 - 1e-15].
double expectedPointwiseLoss(const ScoredSample& s, PointwiseLoss loss);

struct MetricEstimate {
    Metric metric = Metric::Auc;
    double value = 0.0;
    double ciLower = 0.0;
    double ciUpper = 0.0;
    int bootstrapReplicates = 0;
    int failedReplicates = 0;
};

// Percentile bootstrap over resampled internal rows; each replicate re-solves
// the weights against the fixed external target. Deterministic per
// (seed, replicate index), so results do not depend on thread count.
MetricEstimate bootstrapCI(const Sample& sample, const TransformSpec& spec,
                           const MomentTarget& target, const Eigen::VectorXd& scores,
                           Metric metric, int replicates, std::uint64_t seed,
                           const balancer::SolverConfig& cfg = {}, int threads = 1);

}  // namespace extval::metrics
