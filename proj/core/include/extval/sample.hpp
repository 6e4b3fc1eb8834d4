#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace extval {

// Row-level internal data: n observations of p numeric features plus a
// binary outcome. Immutable by convention after construction.
struct Sample {
    Eigen::MatrixXd features;               // n x p
    Eigen::VectorXd outcomes;               // entries in {0, 1}
    std::vector<std::string> featureNames;  // p unique names

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index p() const { return features.cols(); }

    // Index of a named feature; throws std::invalid_argument if unknown.
    Eigen::Index featureIndex(const std::string& name) const;

    // Enforces the structural invariants (sizes, binary outcomes, unique names).
    void validate() const;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Sample loadSampleCsv(const std::string& path, const std::string& outcomeColumn);

void writeSampleCsv(const std::string& path, const Sample& sample,
                    const std::string& outcomeColumn = "y");

}  // namespace extval
