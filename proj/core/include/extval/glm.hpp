#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "extval/sample.hpp"

namespace extval::glm {

struct LinearModel {
    Eigen::VectorXd coefficients;  // p
    double intercept = 0.0;
    double alphaL1 = 0.0;
    double alphaL2 = 0.0;
    bool converged = true;
    int iterations = 0;
};

// Elastic-net logistic regression by proximal gradient with backtracking.
// Objective: mean negative log-likelihood + alphaL1*||b||_1 + (alphaL2/2)*||b||_2^2,
// intercept unpenalized.
LinearModel train(const Sample& sample, double alphaL1 = 1e-3, double alphaL2 = 1e-3,
                  int maxIter = 5000, double tol = 1e-10, std::uint64_t seed = 0);

// sigmoid(intercept + b . x) per row.
Eigen::VectorXd predictProba(const LinearModel& model, const Eigen::MatrixXd& features);

void writeModelJson(const std::string& path, const LinearModel& model);
LinearModel readModelJson(const std::string& path);

}  // namespace extval::glm
