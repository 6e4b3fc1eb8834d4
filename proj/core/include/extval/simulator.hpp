#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "extval/sample.hpp"

namespace extval::sim {

// Coefficients of the data-generating structural equations:
//   H = betaHA * A + eps_H
//   X = betaXA * A + betaXH * H + betaXAH * A * H + eps_X
//   Y ~ Bernoulli(sigmoid(betaYA * A + betaYH * H + betaYX . X + betaYAX . (A * X)))
struct SemCoefficients {
    double betaHA = 0.0;
    Eigen::VectorXd betaXA;   // p
    Eigen::VectorXd betaXH;   // p
    Eigen::VectorXd betaXAH;  // p
    double betaYA = 0.0;
    double betaYH = 0.0;
    Eigen::VectorXd betaYX;   // p
    Eigen::VectorXd betaYAX;  // p
};

struct SemConfig {
    int p = 10;
    double sigmaXAH = 0.0;  // SD scale of the environment-hidden interaction
    std::uint64_t seed = 0;
};

struct GeneratedData {
    Sample internalTrain;
    Sample internalTest;
    Sample external;
    SemCoefficients model;
};

// Random coefficient draw; N(0, s) is read as having SD s. Only the first two
// features carry outcome signal: betaYX = (1, 1, 0, ...), betaYAX = (-0.8, -0.2, 0, ...).
SemCoefficients sampleCoefficients(const SemConfig& cfg);

// n rows from the structural equations in environment A (0 internal,
// 1 external). H stays hidden. Row i draws from Stream(seed, row i), so
// generation parallelizes without changing output.
Sample generate(const SemCoefficients& model, Eigen::Index n, int environment,
                std::uint64_t seed);

// One coefficient draw, three independent samples: train/test with A=0,
// external with A=1.
GeneratedData generateExperimentTriplet(const SemConfig& cfg, Eigen::Index nTrain,
                                        Eigen::Index nTest, Eigen::Index nExternal);

void writeModelJson(const std::string& path, const SemCoefficients& model);
SemCoefficients readModelJson(const std::string& path);

}  // namespace extval::sim
