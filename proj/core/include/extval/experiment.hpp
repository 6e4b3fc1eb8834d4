#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "extval/balancer.hpp"
#include "extval/simulator.hpp"

namespace extval::experiment {

struct RepetitionResult {
    double sigmaXAH = 0.0;
    Eigen::Index n = 0;
    int repetitionIndex = 0;
    double internalAuc = 0.0;
    double externalAuc = 0.0;
    double estimatedAuc = 0.0;
    double absError = 0.0;  // |externalAuc - estimatedAuc|
    double klDivergence = 0.0;
    balancer::SolveStatus solverStatus = balancer::SolveStatus::Infeasible;
    bool solverFailed = false;
};

struct CellSummary {
    double sigmaXAH = 0.0;
    Eigen::Index n = 0;
    double meanKl = 0.0;
    double meanInternalAuc = 0.0;
    double meanExternalAuc = 0.0;
    double meanAbsError = 0.0;
    double q25 = 0.0;  // abs-error quartiles
    double q50 = 0.0;
    double q75 = 0.0;
    int repetitions = 0;
};

struct ExperimentSummary {
    std::vector<CellSummary> cells;
    std::vector<RepetitionResult> raw;
};

// Full synthetic pipeline for one model draw: generate triplet, train the
// elastic-net model on internalTrain, score internalTest/external, build the
// external target (per-class first and second moments plus prevalence), solve
// weights on internalTest and compare weighted vs actual external AUC.
RepetitionResult runRepetition(const sim::SemConfig& cfg, Eigen::Index n, std::uint64_t seed);

// All (sigma, n, repetition) cells with derived sub-seeds; output is
// independent of thread count.
ExperimentSummary runGrid(const std::vector<double>& sigmas,
                          const std::vector<Eigen::Index>& ns, int repetitions,
                          std::uint64_t seed, int threads = 1);

void writeSummaryJson(const std::string& path, const ExperimentSummary& summary);
void writeRawCsv(const std::string& path, const std::vector<RepetitionResult>& raw);

}  // namespace extval::experiment
