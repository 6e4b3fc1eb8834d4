#include "extval/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "extval/glm.hpp"
#include "extval/metrics.hpp"
#include "extval/parallel.hpp"
#include "extval/rng.hpp"
#include "json.hpp"

namespace extval::experiment {

namespace {

constexpr std::uint64_t kGridStream = 0x67726964ULL;  // "grid"

double quantileSorted(const std::vector<double>& v, double q) {
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

RepetitionResult runRepetition(const sim::SemConfig& cfg, Eigen::Index n,
                               std::uint64_t seed) {
    sim::SemConfig local = cfg;
    local.seed = seed;
    sim::GeneratedData data = sim::generateExperimentTriplet(local, n, n, n);

    glm::LinearModel model = glm::train(data.internalTrain);
    Eigen::VectorXd testScores = glm::predictProba(model, data.internalTest.features);
    Eigen::VectorXd extScores = glm::predictProba(model, data.external.features);

    const Eigen::Index nTest = data.internalTest.n();
    const Eigen::Index nExt = data.external.n();
    Eigen::VectorXd uniformTest = Eigen::VectorXd::Constant(nTest, 1.0 / nTest);
    Eigen::VectorXd uniformExt = Eigen::VectorXd::Constant(nExt, 1.0 / nExt);

    RepetitionResult res;
    res.sigmaXAH = cfg.sigmaXAH;
    res.n = n;
    res.internalAuc = metrics::weightedAuc({testScores, data.internalTest.outcomes, uniformTest});
    res.externalAuc = metrics::weightedAuc({extScores, data.external.outcomes, uniformExt});

    // External statistics: per-class mean and second moment of every feature
    // plus prevalence, as a study table would report them.
    TransformSpec spec = TransformSpec::perClassMoments(data.internalTest.featureNames);
    MomentTarget target = statsFromSample(data.external, spec);

    balancer::SolverConfig scfg;
    try {
        TransformedMatrix z = applyTransforms(data.internalTest, spec);
        PrunedInputs pruned = pruneLowVarianceColumns(z, target, scfg.sdCutoff);
        balancer::WeightSolution sol = balancer::solve(pruned.z, pruned.target, scfg);
        res.estimatedAuc =
            metrics::weightedAuc({testScores, data.internalTest.outcomes, sol.weights});
        res.klDivergence = sol.klDivergence;
        res.solverStatus = sol.status;
    } catch (const std::exception&) {
        res.solverFailed = true;
        res.estimatedAuc = res.internalAuc;
        res.solverStatus = balancer::SolveStatus::Infeasible;
    }
    res.absError = std::abs(res.externalAuc - res.estimatedAuc);
    return res;
}

ExperimentSummary runGrid(const std::vector<double>& sigmas,
                          const std::vector<Eigen::Index>& ns, int repetitions,
                          std::uint64_t seed, int threads) {
    if (sigmas.empty() || ns.empty()) throw std::invalid_argument("empty grid axis");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");

    struct Task {
        std::size_t sigmaIdx, nIdx;
        int rep;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < sigmas.size(); ++si)
        for (std::size_t ni = 0; ni < ns.size(); ++ni)
            for (int r = 0; r < repetitions; ++r) tasks.push_back({si, ni, r});

    ExperimentSummary summary;
    summary.raw.resize(tasks.size());
    parallelFor(tasks.size(), threads, [&](std::size_t t) {
        const Task& task = tasks[t];
        sim::SemConfig cfg;
        cfg.sigmaXAH = sigmas[task.sigmaIdx];
        // Sub-seed keyed only by (sigma cell, repetition): the same models are
        // replayed across sample sizes, as in a fixed set of generated models.
        std::uint64_t repSeed = rng::derive(
            seed, kGridStream + task.sigmaIdx, static_cast<std::uint64_t>(task.rep));
        RepetitionResult r = runRepetition(cfg, ns[task.nIdx], repSeed);
        r.repetitionIndex = task.rep;
        summary.raw[t] = r;
    });

    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        for (std::size_t ni = 0; ni < ns.size(); ++ni) {
            CellSummary cell;
            cell.sigmaXAH = sigmas[si];
            cell.n = ns[ni];
            std::vector<double> errs;
            for (const auto& r : summary.raw) {
                if (r.sigmaXAH != sigmas[si] || r.n != ns[ni]) continue;
                cell.meanKl += r.klDivergence;
                cell.meanInternalAuc += r.internalAuc;
                cell.meanExternalAuc += r.externalAuc;
                cell.meanAbsError += r.absError;
                errs.push_back(r.absError);
            }
            cell.repetitions = static_cast<int>(errs.size());
            double c = static_cast<double>(cell.repetitions);
            cell.meanKl /= c;
            cell.meanInternalAuc /= c;
            cell.meanExternalAuc /= c;
            cell.meanAbsError /= c;
            std::sort(errs.begin(), errs.end());
            cell.q25 = quantileSorted(errs, 0.25);
            cell.q50 = quantileSorted(errs, 0.50);
            cell.q75 = quantileSorted(errs, 0.75);
            summary.cells.push_back(cell);
        }
    }
    return summary;
}

void writeSummaryJson(const std::string& path, const ExperimentSummary& summary) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : summary.cells) {
        cells.push_back({{"sigma", c.sigmaXAH},
                         {"n", c.n},
                         {"meanKl", c.meanKl},
                         {"meanInternalAuc", c.meanInternalAuc},
                         {"meanExternalAuc", c.meanExternalAuc},
                         {"meanAbsError", c.meanAbsError},
                         {"q25", c.q25},
                         {"q50", c.q50},
                         {"q75", c.q75},
                         {"reps", c.repetitions}});
    }
    nlohmann::json raw = nlohmann::json::array();
    for (const auto& r : summary.raw) {
        raw.push_back({{"sigma", r.sigmaXAH},
                       {"n", r.n},
                       {"rep", r.repetitionIndex},
                       {"internalAuc", r.internalAuc},
                       {"externalAuc", r.externalAuc},
                       {"estimatedAuc", r.estimatedAuc},
                       {"absError", r.absError},
                       {"klDivergence", r.klDivergence},
                       {"solverStatus", balancer::statusName(r.solverStatus)},
                       {"solverFailed", r.solverFailed}});
    }
    nlohmann::json j;
    j["cells"] = cells;
    j["raw"] = raw;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file '" + path + "'");
    out << j.dump(2) << '\n';
}

void writeRawCsv(const std::string& path, const std::vector<RepetitionResult>& raw) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << std::setprecision(17);
    out << "sigma,n,rep,internalAuc,externalAuc,estimatedAuc,absError,klDivergence,"
           "solverStatus\n";
    for (const auto& r : raw) {
        out << r.sigmaXAH << ',' << r.n << ',' << r.repetitionIndex << ',' << r.internalAuc
            << ',' << r.externalAuc << ',' << r.estimatedAuc << ',' << r.absError << ','
            << r.klDivergence << ',' << balancer::statusName(r.solverStatus) << '\n';
    }
}

}  // namespace extval::experiment
