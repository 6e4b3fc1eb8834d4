// extval: estimate model performance on an external sample from its summary
// statistics, by entropy-balancing an internal sample.
//
// Subcommands: balance, estimate, diagnose, simulate, experiment.
// Exit codes: 0 success, 1 usage or I/O error, 2 infeasibility detected.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "extval/balancer.hpp"
#include "extval/experiment.hpp"
#include "extval/glm.hpp"
#include "extval/metrics.hpp"
#include "extval/sample.hpp"
#include "extval/simulator.hpp"
#include "extval/transform.hpp"
#include "extval/version.hpp"
#include "json.hpp"

namespace {

using namespace extval;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

nlohmann::json solutionToJson(const balancer::WeightSolution& sol,
                              const std::vector<TransformTerm>& terms) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : sol.violations) {
        nlohmann::json item;
        item["termIndex"] = v.termIndex;
        if (v.termIndex >= 0 && v.termIndex < static_cast<Eigen::Index>(terms.size()))
            item["term"] = terms[static_cast<std::size_t>(v.termIndex)].label();
        item["internalMin"] = v.internalMin;
        item["internalMax"] = v.internalMax;
        item["targetValue"] = v.targetValue;
        violations.push_back(item);
    }
    nlohmann::json j;
    j["status"] = balancer::statusName(sol.status);
    j["klDivergence"] = sol.klDivergence;
    j["residualNorm"] = sol.residualNorm;
    j["effectiveSampleSize"] = sol.effectiveSampleSize;
    j["maxWeight"] = sol.maxWeight;
    j["violations"] = violations;
    j["dual"] = std::vector<double>(sol.dual.data(), sol.dual.data() + sol.dual.size());
    j["convergence"] = {{"iterations", sol.convergence.iterations},
                        {"warning", sol.convergence.warning}};
    return j;
}

void writeWeightsCsv(const std::string& path, const Eigen::VectorXd& w) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write weights file '" + path + "'");
    out << std::setprecision(17) << "rowIndex,weight\n";
    for (Eigen::Index i = 0; i < w.size(); ++i) out << i << ',' << w[i] << '\n';
}

// Scores CSV: header "rowIndex,score", rows 0..n-1 in order.
Eigen::VectorXd readScoresCsv(const std::string& path, Eigen::Index expectedRows) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scores file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty scores file");
    std::vector<double> scores;
    Eigen::Index expectIdx = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idxCell, scoreCell;
        if (!std::getline(ss, idxCell, ',') || !std::getline(ss, scoreCell, ','))
            throw std::runtime_error("malformed scores row: '" + line + "'");
        long idx = std::stol(idxCell);
        if (idx != expectIdx)
            throw std::runtime_error("scores misaligned: expected rowIndex " +
                                     std::to_string(expectIdx) + ", got " + idxCell);
        scores.push_back(std::stod(scoreCell));
        ++expectIdx;
    }
    if (expectIdx != expectedRows)
        throw std::runtime_error("scores file has " + std::to_string(expectIdx) +
                                 " rows, internal sample has " + std::to_string(expectedRows));
    return Eigen::Map<Eigen::VectorXd>(scores.data(),
                                       static_cast<Eigen::Index>(scores.size()));
}

struct SeedFlag {
    std::uint64_t value = 0;
    bool provided = false;
};

std::uint64_t resolveSeed(const SeedFlag& seed, bool strict) {
    if (seed.provided) return seed.value;
    if (strict) throw std::runtime_error("--seed is required in --strict mode");
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int cmdBalance(const std::string& internalPath, const std::string& outcomeColumn,
               const std::string& statsPath, double lambda, const std::string& outWeights,
               const std::string& outReport) {
    Sample sample = loadSampleCsv(internalPath, outcomeColumn);
    StatsFile stats = readStatsJson(statsPath);

    balancer::SolverConfig cfg;
    cfg.lambda = lambda;
    TransformedMatrix z = applyTransforms(sample, stats.spec);
    PrunedInputs pruned = pruneLowVarianceColumns(z, stats.target, cfg.sdCutoff);
    balancer::WeightSolution sol = balancer::solve(pruned.z, pruned.target, cfg);

    if (!outWeights.empty()) writeWeightsCsv(outWeights, sol.weights);
    nlohmann::json report = solutionToJson(sol, pruned.z.spec.terms);
    report["prunedTerms"] = nlohmann::json::array();
    for (const auto& t : pruned.prunedTerms) report["prunedTerms"].push_back(t.label());
    report["toolVersion"] = kToolVersion;
    report["schemaVersion"] = kReportSchemaVersion;
    if (!outReport.empty()) {
        std::ofstream out(outReport);
        if (!out) throw std::runtime_error("cannot write report '" + outReport + "'");
        out << report.dump(2) << '\n';
    }
    std::cout << report.dump(2) << std::endl;
    return sol.status == balancer::SolveStatus::Infeasible ? kExitInfeasible : kExitOk;
}

int cmdEstimate(const std::string& internalPath, const std::string& outcomeColumn,
                const std::string& statsPath, const std::string& scoresPath,
                const std::vector<std::string>& metricNames, int bootstrap,
                const SeedFlag& seedFlag, bool strict, int threads,
                const std::string& outReport) {
    Sample sample = loadSampleCsv(internalPath, outcomeColumn);
    StatsFile stats = readStatsJson(statsPath);
    Eigen::VectorXd scores = readScoresCsv(scoresPath, sample.n());
    std::uint64_t seed = resolveSeed(seedFlag, strict);

    std::vector<metrics::Metric> requested;
    for (const auto& name : metricNames) {
        if (name == "auc")
            requested.push_back(metrics::Metric::Auc);
        else if (name == "logloss")
            requested.push_back(metrics::Metric::LogLoss);
        else if (name == "brier")
            requested.push_back(metrics::Metric::Brier);
        else
            throw std::runtime_error("unknown metric '" + name + "'");
    }

    balancer::SolverConfig cfg;
    TransformedMatrix z = applyTransforms(sample, stats.spec);
    PrunedInputs pruned = pruneLowVarianceColumns(z, stats.target, cfg.sdCutoff);
    balancer::WeightSolution sol = balancer::solve(pruned.z, pruned.target, cfg);

    nlohmann::json metricsJson = nlohmann::json::array();
    for (metrics::Metric m : requested) {
        metrics::MetricEstimate est =
            metrics::bootstrapCI(sample, pruned.z.spec, pruned.target, scores, m, bootstrap,
                                 seed, cfg, threads);
        metricsJson.push_back({{"metric", metrics::metricName(m)},
                               {"value", est.value},
                               {"ciLower", est.ciLower},
                               {"ciUpper", est.ciUpper},
                               {"bootstrapReplicates", est.bootstrapReplicates},
                               {"failedReplicates", est.failedReplicates}});
    }

    nlohmann::json report;
    report["metrics"] = metricsJson;
    report["solver"] = solutionToJson(sol, pruned.z.spec.terms);
    nlohmann::json prunedTerms = nlohmann::json::array();
    for (const auto& t : pruned.prunedTerms) prunedTerms.push_back(t.label());
    report["inputs"] = {{"internalRows", sample.n()},
                        {"specTerms", stats.spec.k()},
                        {"prunedTerms", prunedTerms}};
    report["toolVersion"] = kToolVersion;
    report["schemaVersion"] = kReportSchemaVersion;
    report["seed"] = seed;
    if (!outReport.empty()) {
        std::ofstream out(outReport);
        if (!out) throw std::runtime_error("cannot write report '" + outReport + "'");
        out << report.dump(2) << '\n';
    }
    std::cout << report.dump(2) << std::endl;
    return kExitOk;
}

int cmdDiagnose(const std::string& internalPath, const std::string& outcomeColumn,
                const std::string& statsPath, const std::string& outJson) {
    Sample sample = loadSampleCsv(internalPath, outcomeColumn);
    StatsFile stats = readStatsJson(statsPath);
    TransformedMatrix z = applyTransforms(sample, stats.spec);
    std::vector<balancer::Violation> violations = balancer::feasibilityCheck(z, stats.target);

    nlohmann::json rows = nlohmann::json::array();
    std::cout << std::left << std::setw(36) << "term" << std::setw(14) << "internalMin"
              << std::setw(14) << "internalMax" << std::setw(14) << "target"
              << "status\n";
    for (Eigen::Index j = 0; j < z.z.cols(); ++j) {
        double lo = z.z.col(j).minCoeff();
        double hi = z.z.col(j).maxCoeff();
        bool violated = false;
        for (const auto& v : violations) violated = violated || v.termIndex == j;
        const std::string label = stats.spec.terms[static_cast<std::size_t>(j)].label();
        std::cout << std::left << std::setw(36) << label << std::setw(14) << lo
                  << std::setw(14) << hi << std::setw(14) << stats.target.values[j]
                  << (violated ? "VIOLATED" : "ok") << '\n';
        rows.push_back({{"term", label},
                        {"internalMin", lo},
                        {"internalMax", hi},
                        {"targetValue", stats.target.values[j]},
                        {"violated", violated}});
    }
    nlohmann::json report;
    report["violations"] = rows;
    report["violationCount"] = violations.size();
    if (!outJson.empty()) {
        std::ofstream out(outJson);
        if (!out) throw std::runtime_error("cannot write report '" + outJson + "'");
        out << report.dump(2) << '\n';
    }
    return violations.empty() ? kExitOk : kExitInfeasible;
}

int cmdSimulate(double sigmaXAH, int p, Eigen::Index n, const SeedFlag& seedFlag, bool strict,
                const std::string& outDir) {
    sim::SemConfig cfg;
    cfg.p = p;
    cfg.sigmaXAH = sigmaXAH;
    cfg.seed = resolveSeed(seedFlag, strict);
    sim::GeneratedData data = sim::generateExperimentTriplet(cfg, n, n, n);
    writeSampleCsv(outDir + "/internal_train.csv", data.internalTrain);
    writeSampleCsv(outDir + "/internal_test.csv", data.internalTest);
    writeSampleCsv(outDir + "/external.csv", data.external);
    sim::writeModelJson(outDir + "/model.json", data.model);
    std::cout << "wrote internal_train.csv, internal_test.csv, external.csv, model.json (seed "
              << cfg.seed << ")" << std::endl;
    return kExitOk;
}

int cmdExperiment(const std::vector<double>& sigmas, const std::vector<long>& ns, int reps,
                  const SeedFlag& seedFlag, bool strict, int threads,
                  const std::string& outReport, const std::string& outCsv) {
    std::uint64_t seed = resolveSeed(seedFlag, strict);
    std::vector<Eigen::Index> sizes(ns.begin(), ns.end());
    experiment::ExperimentSummary summary =
        experiment::runGrid(sigmas, sizes, reps, seed, threads);
    if (!outReport.empty()) experiment::writeSummaryJson(outReport, summary);
    if (!outCsv.empty()) experiment::writeRawCsv(outCsv, summary.raw);
    std::cout << std::left << std::setw(8) << "sigma" << std::setw(8) << "n" << std::setw(12)
              << "meanKl" << std::setw(12) << "intAuc" << std::setw(12) << "extAuc"
              << std::setw(12) << "absErr" << '\n';
    for (const auto& c : summary.cells)
        std::cout << std::left << std::setw(8) << c.sigmaXAH << std::setw(8) << c.n
                  << std::setw(12) << c.meanKl << std::setw(12) << c.meanInternalAuc
                  << std::setw(12) << c.meanExternalAuc << std::setw(12) << c.meanAbsError
                  << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"External-performance estimation via entropy-balanced weights"};
    app.set_version_flag("--version", std::string("extval ") + kToolVersion +
                                          " (report schema " + kReportSchemaVersion + ")");
    app.require_subcommand(1);

    bool strict = false;
    int threads = 1;
    app.add_flag("--strict", strict, "require an explicit --seed");
    app.add_option("--threads", threads, "worker threads for bootstrap/grid")
        ->check(CLI::PositiveNumber);

    SeedFlag seed;
    auto addSeed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { seed.value = v; seed.provided = true; },
            "random seed");
    };

    // balance
    std::string internalPath, outcomeColumn = "y", statsPath, outWeights, outReport, scoresPath,
                outDir = ".", outCsv;
    double lambda = 1e-6;
    auto* balance = app.add_subcommand("balance", "solve for balancing weights");
    balance->add_option("--internal", internalPath, "internal sample CSV")->required();
    balance->add_option("--outcome", outcomeColumn, "outcome column name");
    balance->add_option("--stats", statsPath, "external statistics JSON")->required();
    balance->add_option("--lambda", lambda, "relaxation trade-off");
    balance->add_option("--out-weights", outWeights, "weights CSV output");
    balance->add_option("--out-report", outReport, "solution report JSON output");

    // estimate
    std::vector<std::string> metricNames{"auc", "logloss", "brier"};
    int bootstrap = 1000;
    auto* estimate = app.add_subcommand("estimate", "estimate external metrics with CIs");
    estimate->add_option("--internal", internalPath, "internal sample CSV")->required();
    estimate->add_option("--outcome", outcomeColumn, "outcome column name");
    estimate->add_option("--stats", statsPath, "external statistics JSON")->required();
    estimate->add_option("--scores", scoresPath, "model scores CSV (rowIndex,score)")
        ->required();
    estimate->add_option("--metrics", metricNames, "metrics: auc, logloss, brier")
        ->delimiter(',');
    estimate->add_option("--bootstrap", bootstrap, "bootstrap replicates")
        ->check(CLI::PositiveNumber);
    estimate->add_option("--out-report", outReport, "estimation report JSON output");
    addSeed(estimate);

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "feasibility check against targets");
    diagnose->add_option("--internal", internalPath, "internal sample CSV")->required();
    diagnose->add_option("--outcome", outcomeColumn, "outcome column name");
    diagnose->add_option("--stats", statsPath, "external statistics JSON")->required();
    diagnose->add_option("--out-report", outReport, "diagnosis JSON output");

    // simulate
    double sigmaXAH = 0.0;
    int p = 10;
    long nSim = 1000;
    auto* simulate = app.add_subcommand("simulate", "generate synthetic triplet");
    simulate->add_option("--sigma-xah", sigmaXAH, "correlation-shift strength")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--p", p, "feature dimension")->check(CLI::Range(2, 10000));
    simulate->add_option("--n", nSim, "rows per generated sample")->check(CLI::PositiveNumber);
    simulate->add_option("--out-dir", outDir, "output directory");
    addSeed(simulate);

    // experiment
    std::vector<double> sigmas{0.0, 0.5, 1.0};
    std::vector<long> nsGrid{5000};
    int reps = 200;
    auto* exper = app.add_subcommand("experiment", "run the synthetic study grid");
    exper->add_option("--sigmas", sigmas, "sigma values")->delimiter(',');
    exper->add_option("--sigma-xah", sigmas, "alias for --sigmas")->delimiter(',');
    exper->add_option("--ns,--n", nsGrid, "sample sizes")->delimiter(',');
    exper->add_option("--reps", reps, "repetitions per cell")->check(CLI::PositiveNumber);
    exper->add_option("--out-report", outReport, "summary JSON output");
    exper->add_option("--out-csv", outCsv, "raw repetition CSV output");
    addSeed(exper);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        for (double s : sigmas)
            if (s < 0.0) throw std::runtime_error("sigma must be nonnegative");
        if (balance->parsed())
            return cmdBalance(internalPath, outcomeColumn, statsPath, lambda, outWeights,
                              outReport);
        if (estimate->parsed())
            return cmdEstimate(internalPath, outcomeColumn, statsPath, scoresPath, metricNames,
                               bootstrap, seed, strict, threads, outReport);
        if (diagnose->parsed())
            return cmdDiagnose(internalPath, outcomeColumn, statsPath, outReport);
        if (simulate->parsed())
            return cmdSimulate(sigmaXAH, p, nSim, seed, strict, outDir);
        if (exper->parsed())
            return cmdExperiment(sigmas, nsGrid, reps, seed, strict, threads, outReport,
                                 outCsv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return kExitUsage;
    }
    return kExitUsage;
}
