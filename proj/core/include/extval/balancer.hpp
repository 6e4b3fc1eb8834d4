#pragma once

#include <Eigen/Dense>
#include <vector>

#include "extval/transform.hpp"

namespace extval::balancer {

enum class SolveStatus { Exact, Relaxed, Infeasible };

const char* statusName(SolveStatus s);

struct SolverConfig {
    double lambda = 1e-6;       // relaxation trade-off
    double minWeight = 1e-6;    // post-hoc floor on individual weights
    double sdCutoff = 1e-4;     // column SD pruning threshold
    double gradTol = 1e-9;      // dual gradient infinity-norm stop
    double residualTol = 1e-6;  // constraint residual for Exact status
    int maxNewtonIter = 200;
    int maxMirrorIter = 50000;

    enum class StepRule { Fixed, Backtracking };
    StepRule mirrorStepRule = StepRule::Backtracking;
    double mirrorFixedStep = 0.1;
};

// One necessary-condition failure: the target lies outside the internal
// column range, so no simplex weighting can reach it.
struct Violation {
    Eigen::Index termIndex;
    double internalMin;
    double internalMax;
    double targetValue;
};

struct ConvergenceInfo {
    int iterations = 0;
    bool warning = false;
};

struct WeightSolution {
    Eigen::VectorXd weights;   // n, simplex
    Eigen::VectorXd dual;      // k+1: moment multipliers plus normalization
    Eigen::VectorXd residual;  // Z^T w - mu
    double klDivergence = 0.0;
    double residualNorm = 0.0;
    double effectiveSampleSize = 0.0;
    double maxWeight = 0.0;
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<Violation> violations;
    ConvergenceInfo convergence;
    std::vector<double> objectiveTrace;  // relaxed solver only, accepted steps
};

std::vector<Violation> feasibilityCheck(const TransformedMatrix& z, const MomentTarget& target);

// Max-entropy weights via damped Newton on the dual of the equality-constrained
// problem. Status Exact when the recovered weights reproduce the target within
// cfg.residualTol, Infeasible otherwise.
WeightSolution solveExact(const TransformedMatrix& z, const MomentTarget& target,
                          const SolverConfig& cfg = {});

// Penalized trade-off ||Z^T w - mu||^2 + lambda * KL(w || uniform) over the
// simplex, by entropic mirror descent.
WeightSolution solveRelaxed(const TransformedMatrix& z, const MomentTarget& target,
                            const SolverConfig& cfg = {});

// Dispatcher: necessary-condition check, exact solve, relaxed fallback,
// then minimum-weight clamping with diagnostics recomputed.
WeightSolution solve(const TransformedMatrix& z, const MomentTarget& target,
                     const SolverConfig& cfg = {});

struct WorstCaseResult {
    double bound = 0.0;                 // sum_i w_i * loss_i at the maximizer
    double regularizedObjective = 0.0;  // bound - lambda * KL(w || uniform)
    WeightSolution solution;
};

// Maximum regularized weighted loss over all weight sets reproducing the
// target. Throws std::runtime_error when the target is infeasible.
WorstCaseResult worstCaseBound(const TransformedMatrix& z, const MomentTarget& target,
                               const Eigen::VectorXd& losses, double lambda,
                               const SolverConfig& cfg = {});

}  // namespace extval::balancer
