#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "extval/sample.hpp"

namespace extval {

// A single summary-statistic definition: which per-individual quantity is
// averaged to produce one reported expectation.
enum class TermKind { PerClassMean, PerClassSecondMoment, MarginalMean, Prevalence };

struct TransformTerm {
    TermKind kind;
    std::string feature;  // empty for Prevalence
    int cls = -1;         // 0 or 1 for per-class terms, -1 otherwise

    bool operator==(const TransformTerm&) const = default;
    std::string label() const;
};

struct TransformSpec {
    std::vector<TransformTerm> terms;

    Eigen::Index k() const { return static_cast<Eigen::Index>(terms.size()); }

    // Throws std::invalid_argument on duplicate terms or malformed class tags.
    void validate() const;

    // Per-class mean (and optionally second moment) of every feature, plus
    // prevalence. This is the statistic set used throughout the synthetic study.
    static TransformSpec perClassMoments(const std::vector<std::string>& featureNames,
                                         bool secondMoments = true);
};

// Z: one row per individual, one column per spec term.
struct TransformedMatrix {
    Eigen::MatrixXd z;   // n x k
    TransformSpec spec;  // column order
};

// The external expectation vector the weights must reproduce.
struct MomentTarget {
    Eigen::VectorXd values;
    std::optional<long> nExternal;  // reporting only
};

// How reported class variances are to be read when converting them to
// second-moment targets.
enum class VarianceConvention { Population, Sample };

struct ReportedClassStat {
    std::string feature;
    double classMean = 0.0;
    double classVariance = 0.0;
    int cls = 0;
};

TransformedMatrix applyTransforms(const Sample& sample, const TransformSpec& spec);

MomentTarget statsFromSample(const Sample& sample, const TransformSpec& spec);

// Turns published per-class means/variances plus prevalence into the target
// vector for `spec`. Sample-convention variances are rescaled by (n-1)/n when
// nExternal is known.
MomentTarget convertReportedStats(const std::vector<ReportedClassStat>& report,
                                  double prevalence, const TransformSpec& spec,
                                  VarianceConvention convention = VarianceConvention::Population,
                                  std::optional<long> nExternal = std::nullopt);

struct PrunedInputs {
    TransformedMatrix z;
    MomentTarget target;
    std::vector<TransformTerm> prunedTerms;
};

// Drops columns whose sample SD falls below sdCutoff, together with the
// aligned target entries. Throws if nothing survives.
PrunedInputs pruneLowVarianceColumns(const TransformedMatrix& z, const MomentTarget& target,
                                     double sdCutoff);

// Statistics JSON: {"spec": [...], "values": [...], "nExternal": ...}.
struct StatsFile {
    TransformSpec spec;
    MomentTarget target;
};

StatsFile readStatsJson(const std::string& path);
void writeStatsJson(const std::string& path, const StatsFile& stats);

}  // namespace extval
