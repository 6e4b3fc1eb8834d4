#include "extval/transform.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace extval {

namespace {

const char* kindName(TermKind kind) {
    switch (kind) {
        case TermKind::PerClassMean: return "perClassMean";
        case TermKind::PerClassSecondMoment: return "perClassSecondMoment";
        case TermKind::MarginalMean: return "marginalMean";
        case TermKind::Prevalence: return "prevalence";
    }
    return "?";
}

TermKind kindFromName(const std::string& name) {
    if (name == "perClassMean") return TermKind::PerClassMean;
    if (name == "perClassSecondMoment") return TermKind::PerClassSecondMoment;
    if (name == "marginalMean") return TermKind::MarginalMean;
    if (name == "prevalence") return TermKind::Prevalence;
    throw std::invalid_argument("unknown term kind '" + name + "'");
}

bool perClass(TermKind kind) {
    return kind == TermKind::PerClassMean || kind == TermKind::PerClassSecondMoment;
}

}  // namespace

std::string TransformTerm::label() const {
    std::string s = kindName(kind);
    if (kind != TermKind::Prevalence) s += "(" + feature;
    if (perClass(kind)) s += ",c=" + std::to_string(cls);
    if (kind != TermKind::Prevalence) s += ")";
    return s;
}

void TransformSpec::validate() const {
    if (terms.empty()) throw std::invalid_argument("transform spec has no terms");
    std::set<std::tuple<int, std::string, int>> seen;
    for (const auto& t : terms) {
        if (perClass(t.kind) && t.cls != 0 && t.cls != 1)
            throw std::invalid_argument("per-class term '" + t.label() + "' needs class 0 or 1");
        if (!perClass(t.kind) && t.cls != -1)
            throw std::invalid_argument("term '" + t.label() + "' must not carry a class");
        if (t.kind == TermKind::Prevalence && !t.feature.empty())
            throw std::invalid_argument("prevalence term must not name a feature");
        if (t.kind != TermKind::Prevalence && t.feature.empty())
            throw std::invalid_argument("term of kind " + std::string(kindName(t.kind)) +
                                        " needs a feature name");
        if (!seen.insert({static_cast<int>(t.kind), t.feature, t.cls}).second)
            throw std::invalid_argument("duplicate term '" + t.label() + "'");
    }
}

TransformSpec TransformSpec::perClassMoments(const std::vector<std::string>& featureNames,
                                             bool secondMoments) {
    TransformSpec spec;
    for (const auto& f : featureNames) {
        for (int c : {1, 0}) {
            spec.terms.push_back({TermKind::PerClassMean, f, c});
            if (secondMoments) spec.terms.push_back({TermKind::PerClassSecondMoment, f, c});
        }
    }
    spec.terms.push_back({TermKind::Prevalence, "", -1});
    return spec;
}

TransformedMatrix applyTransforms(const Sample& sample, const TransformSpec& spec) {
    spec.validate();
    const Eigen::Index n = sample.n();
    TransformedMatrix out;
    out.spec = spec;
    out.z.resize(n, spec.k());
    const Eigen::VectorXd& y = sample.outcomes;
    for (Eigen::Index j = 0; j < spec.k(); ++j) {
        const TransformTerm& t = spec.terms[static_cast<std::size_t>(j)];
        if (t.kind == TermKind::Prevalence) {
            out.z.col(j) = y;
            continue;
        }
        Eigen::Index f = sample.featureIndex(t.feature);
        Eigen::VectorXd col = sample.features.col(f);
        switch (t.kind) {
            case TermKind::MarginalMean:
                break;
            case TermKind::PerClassMean:
                col = t.cls == 1 ? col.cwiseProduct(y).eval()
                                 : col.cwiseProduct((1.0 - y.array()).matrix()).eval();
                break;
            case TermKind::PerClassSecondMoment:
                col = col.array().square().matrix();
                col = t.cls == 1 ? col.cwiseProduct(y).eval()
                                 : col.cwiseProduct((1.0 - y.array()).matrix()).eval();
                break;
            case TermKind::Prevalence:
                break;
        }
        out.z.col(j) = col;
    }
    return out;
}

MomentTarget statsFromSample(const Sample& sample, const TransformSpec& spec) {
    TransformedMatrix z = applyTransforms(sample, spec);
    MomentTarget target;
    target.values = z.z.colwise().mean();
    target.nExternal = static_cast<long>(sample.n());
    return target;
}

MomentTarget convertReportedStats(const std::vector<ReportedClassStat>& report,
                                  double prevalence, const TransformSpec& spec,
                                  VarianceConvention convention,
                                  std::optional<long> nExternal) {
    spec.validate();
    if (!(prevalence > 0.0 && prevalence < 1.0))
        throw std::invalid_argument("prevalence must lie in (0, 1)");

    auto find = [&](const std::string& feature, int cls) -> const ReportedClassStat& {
        for (const auto& r : report)
            if (r.feature == feature && r.cls == cls) return r;
        throw std::invalid_argument("missing report entry for feature '" + feature +
                                    "', class " + std::to_string(cls));
    };
    double bessel = 1.0;
    if (convention == VarianceConvention::Sample && nExternal && *nExternal > 1)
        bessel = static_cast<double>(*nExternal - 1) / static_cast<double>(*nExternal);

    MomentTarget target;
    target.values.resize(spec.k());
    target.nExternal = nExternal;
    for (Eigen::Index j = 0; j < spec.k(); ++j) {
        const TransformTerm& t = spec.terms[static_cast<std::size_t>(j)];
        double share1 = prevalence, share0 = 1.0 - prevalence;
        switch (t.kind) {
            case TermKind::Prevalence:
                target.values[j] = prevalence;
                break;
            case TermKind::PerClassMean: {
                const auto& r = find(t.feature, t.cls);
                target.values[j] = r.classMean * (t.cls == 1 ? share1 : share0);
                break;
            }
            case TermKind::PerClassSecondMoment: {
                const auto& r = find(t.feature, t.cls);
                double secondMoment = r.classMean * r.classMean + r.classVariance * bessel;
                target.values[j] = secondMoment * (t.cls == 1 ? share1 : share0);
                break;
            }
            case TermKind::MarginalMean: {
                const auto& r1 = find(t.feature, 1);
                const auto& r0 = find(t.feature, 0);
                target.values[j] = r1.classMean * share1 + r0.classMean * share0;
                break;
            }
        }
    }
    return target;
}

PrunedInputs pruneLowVarianceColumns(const TransformedMatrix& z, const MomentTarget& target,
                                     double sdCutoff) {
    if (sdCutoff < 0.0) throw std::invalid_argument("sdCutoff must be nonnegative");
    if (target.values.size() != z.z.cols())
        throw std::invalid_argument("target length does not match transformed columns");

    const Eigen::Index n = z.z.rows();
    std::vector<Eigen::Index> keep;
    PrunedInputs out;
    for (Eigen::Index j = 0; j < z.z.cols(); ++j) {
        double mean = z.z.col(j).mean();
        double var = (z.z.col(j).array() - mean).square().sum() / static_cast<double>(n);
        if (std::sqrt(var) < sdCutoff)
            out.prunedTerms.push_back(z.spec.terms[static_cast<std::size_t>(j)]);
        else
            keep.push_back(j);
    }
    if (keep.empty()) throw std::runtime_error("no usable constraints: all columns pruned");

    out.z.z.resize(n, static_cast<Eigen::Index>(keep.size()));
    out.target.values.resize(static_cast<Eigen::Index>(keep.size()));
    out.target.nExternal = target.nExternal;
    for (std::size_t jj = 0; jj < keep.size(); ++jj) {
        out.z.z.col(static_cast<Eigen::Index>(jj)) = z.z.col(keep[jj]);
        out.target.values[static_cast<Eigen::Index>(jj)] = target.values[keep[jj]];
        out.z.spec.terms.push_back(z.spec.terms[static_cast<std::size_t>(keep[jj])]);
    }
    return out;
}

StatsFile readStatsJson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stats file '" + path + "'");
    nlohmann::json j;
    in >> j;
    if (!j.contains("spec") || !j.contains("values"))
        throw std::runtime_error("stats file '" + path + "' needs 'spec' and 'values'");

    StatsFile out;
    for (const auto& term : j.at("spec")) {
        TransformTerm t;
        t.kind = kindFromName(term.at("kind").get<std::string>());
        if (term.contains("feature") && !term.at("feature").is_null())
            t.feature = term.at("feature").get<std::string>();
        if (term.contains("class") && !term.at("class").is_null())
            t.cls = term.at("class").get<int>();
        out.spec.terms.push_back(std::move(t));
    }
    out.spec.validate();
    std::vector<double> values = j.at("values").get<std::vector<double>>();
    if (values.size() != out.spec.terms.size())
        throw std::runtime_error("stats file: 'values' length " + std::to_string(values.size()) +
                                 " does not match spec length " +
                                 std::to_string(out.spec.terms.size()));
    out.target.values = Eigen::Map<Eigen::VectorXd>(values.data(),
                                                    static_cast<Eigen::Index>(values.size()));
    if (j.contains("nExternal") && !j.at("nExternal").is_null()) {
        long ne = j.at("nExternal").get<long>();
        if (ne <= 0) throw std::runtime_error("stats file: 'nExternal' must be positive");
        out.target.nExternal = ne;
    }
    for (Eigen::Index i = 0; i < out.spec.k(); ++i) {
        if (out.spec.terms[static_cast<std::size_t>(i)].kind == TermKind::Prevalence) {
            double v = out.target.values[i];
            if (v < 0.0 || v > 1.0)
                throw std::runtime_error("stats file: prevalence value outside [0, 1]");
        }
    }
    return out;
}

void writeStatsJson(const std::string& path, const StatsFile& stats) {
    nlohmann::json spec = nlohmann::json::array();
    for (const auto& t : stats.spec.terms) {
        nlohmann::json term;
        term["kind"] = kindName(t.kind);
        term["feature"] = t.feature.empty() ? nlohmann::json() : nlohmann::json(t.feature);
        term["class"] = t.cls < 0 ? nlohmann::json() : nlohmann::json(t.cls);
        spec.push_back(term);
    }
    nlohmann::json j;
    j["spec"] = spec;
    j["values"] = std::vector<double>(stats.target.values.data(),
                                      stats.target.values.data() + stats.target.values.size());
    j["nExternal"] =
        stats.target.nExternal ? nlohmann::json(*stats.target.nExternal) : nlohmann::json();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write stats file '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace extval
