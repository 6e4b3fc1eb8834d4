#include "extval/sample.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace extval {

Eigen::Index Sample::featureIndex(const std::string& name) const {
    auto it = std::find(featureNames.begin(), featureNames.end(), name);
    if (it == featureNames.end())
        throw std::invalid_argument("unknown feature '" + name + "'");
    return static_cast<Eigen::Index>(it - featureNames.begin());
}

void Sample::validate() const {
    if (features.rows() < 1 || features.cols() < 1)
        throw std::invalid_argument("sample must have at least one row and one feature");
    if (outcomes.size() != features.rows())
        throw std::invalid_argument("outcome length does not match feature rows");
    if (static_cast<Eigen::Index>(featureNames.size()) != features.cols())
        throw std::invalid_argument("feature name count does not match columns");
    if (!features.allFinite())
        throw std::invalid_argument("features contain non-finite values");
    for (Eigen::Index i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i] != 0.0 && outcomes[i] != 1.0)
            throw std::invalid_argument("outcome not binary at row " + std::to_string(i));
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : featureNames) {
        if (!seen.insert(name).second)
            throw std::invalid_argument("duplicate feature name '" + name + "'");
    }
}

namespace {

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parseCell(const std::string& cell, std::size_t row, const std::string& column) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw CsvError("non-numeric cell at row " + std::to_string(row) + ", column '" +
                       column + "': '" + cell + "'");
    return value;
}

}  // namespace

Sample loadSampleCsv(const std::string& path, const std::string& outcomeColumn) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header = splitCsvLine(line);
    std::unordered_set<std::string> seen;
    for (const auto& h : header) {
        if (!seen.insert(h).second) throw CsvError("duplicate header '" + h + "'");
    }
    auto outcomeIt = std::find(header.begin(), header.end(), outcomeColumn);
    if (outcomeIt == header.end())
        throw CsvError("outcome column '" + outcomeColumn + "' not found in header");
    std::size_t outcomeIdx = static_cast<std::size_t>(outcomeIt - header.begin());

    std::vector<std::string> featureNames;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != outcomeIdx) featureNames.push_back(header[j]);
    if (featureNames.empty()) throw CsvError("no feature columns in '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::vector<double> outcomes;
    std::size_t rowNum = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++rowNum;
        std::vector<std::string> cells = splitCsvLine(line);
        if (cells.size() != header.size())
            throw CsvError("row " + std::to_string(rowNum) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(featureNames.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = parseCell(cells[j], rowNum, header[j]);
            if (j == outcomeIdx) {
                if (v != 0.0 && v != 1.0)
                    throw CsvError("outcome not binary at row " + std::to_string(rowNum));
                outcomes.push_back(v);
            } else {
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw CsvError("no data rows in '" + path + "'");

    Sample sample;
    sample.features.resize(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(featureNames.size()));
    sample.outcomes.resize(static_cast<Eigen::Index>(outcomes.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            sample.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        sample.outcomes[static_cast<Eigen::Index>(i)] = outcomes[i];
    }
    sample.featureNames = std::move(featureNames);
    sample.validate();
    return sample;
}

void writeSampleCsv(const std::string& path, const Sample& sample,
                    const std::string& outcomeColumn) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write file '" + path + "'");
    out << std::setprecision(17);
    for (std::size_t j = 0; j < sample.featureNames.size(); ++j) {
        if (j) out << ',';
        out << sample.featureNames[j];
    }
    out << ',' << outcomeColumn << '\n';
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
        for (Eigen::Index j = 0; j < sample.p(); ++j) {
            if (j) out << ',';
            out << sample.features(i, j);
        }
        out << ',' << static_cast<int>(sample.outcomes[i]) << '\n';
    }
}

}  // namespace extval
