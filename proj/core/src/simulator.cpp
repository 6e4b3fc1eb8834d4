#include "extval/simulator.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "extval/rng.hpp"
#include "json.hpp"

namespace extval::sim {

namespace {

constexpr std::uint64_t kCoefStream = 0x636f6566ULL;  // "coef"
constexpr std::uint64_t kRowStream = 0x726f7773ULL;   // "rows"

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd normalVector(rng::Stream& s, int p, double sd) {
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j) v[j] = sd * s.normal();
    return v;
}

std::vector<std::string> defaultFeatureNames(int p) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (int j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

}  // namespace

SemCoefficients sampleCoefficients(const SemConfig& cfg) {
    if (cfg.p < 2) throw std::invalid_argument("need p >= 2");
    if (cfg.sigmaXAH < 0.0) throw std::invalid_argument("sigmaXAH must be nonnegative");

    rng::Stream s(cfg.seed, kCoefStream, 0);
    const double sd02 = 0.2;

    SemCoefficients c;
    c.betaHA = sd02 * s.normal();
    c.betaYA = sd02 * s.normal();
    c.betaXA = normalVector(s, cfg.p, sd02);
    c.betaXH = normalVector(s, cfg.p, 1.0);
    c.betaYH = s.normal();
    c.betaXAH = cfg.sigmaXAH > 0.0 ? normalVector(s, cfg.p, cfg.sigmaXAH)
                                   : Eigen::VectorXd::Zero(cfg.p).eval();
    c.betaYX = Eigen::VectorXd::Zero(cfg.p);
    c.betaYX[0] = 1.0;
    c.betaYX[1] = 1.0;
    c.betaYAX = Eigen::VectorXd::Zero(cfg.p);
    c.betaYAX[0] = -0.8;
    c.betaYAX[1] = -0.2;
    return c;
}

Sample generate(const SemCoefficients& model, Eigen::Index n, int environment,
                std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("need n >= 1");
    if (environment != 0 && environment != 1)
        throw std::invalid_argument("environment must be 0 or 1");
    const int p = static_cast<int>(model.betaXH.size());
    const double a = static_cast<double>(environment);

    Sample out;
    out.features.resize(n, p);
    out.outcomes.resize(n);
    out.featureNames = defaultFeatureNames(p);

    for (Eigen::Index i = 0; i < n; ++i) {
        rng::Stream row(seed, kRowStream, static_cast<std::uint64_t>(i));
        double h = model.betaHA * a + row.normal();
        double f = model.betaYA * a + model.betaYH * h;
        for (int j = 0; j < p; ++j) {
            double x = model.betaXA[j] * a + model.betaXH[j] * h + model.betaXAH[j] * a * h +
                       row.normal();
            out.features(i, j) = x;
            f += model.betaYX[j] * x + model.betaYAX[j] * a * x;
        }
        out.outcomes[i] = row.uniform() < sigmoid(f) ? 1.0 : 0.0;
    }
    return out;
}

GeneratedData generateExperimentTriplet(const SemConfig& cfg, Eigen::Index nTrain,
                                        Eigen::Index nTest, Eigen::Index nExternal) {
    GeneratedData data;
    data.model = sampleCoefficients(cfg);
    data.internalTrain = generate(data.model, nTrain, 0, rng::derive(cfg.seed, 1));
    data.internalTest = generate(data.model, nTest, 0, rng::derive(cfg.seed, 2));
    data.external = generate(data.model, nExternal, 1, rng::derive(cfg.seed, 3));
    return data;
}

namespace {

nlohmann::json vecToJson(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vecFromJson(const nlohmann::json& j) {
    std::vector<double> v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void writeModelJson(const std::string& path, const SemCoefficients& model) {
    nlohmann::json j;
    j["betaHA"] = model.betaHA;
    j["betaXA"] = vecToJson(model.betaXA);
    j["betaXH"] = vecToJson(model.betaXH);
    j["betaXAH"] = vecToJson(model.betaXAH);
    j["betaYA"] = model.betaYA;
    j["betaYH"] = model.betaYH;
    j["betaYX"] = vecToJson(model.betaYX);
    j["betaYAX"] = vecToJson(model.betaYAX);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    out << j.dump(2) << '\n';
}

SemCoefficients readModelJson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    nlohmann::json j;
    in >> j;
    SemCoefficients c;
    c.betaHA = j.at("betaHA").get<double>();
    c.betaXA = vecFromJson(j.at("betaXA"));
    c.betaXH = vecFromJson(j.at("betaXH"));
    c.betaXAH = vecFromJson(j.at("betaXAH"));
    c.betaYA = j.at("betaYA").get<double>();
    c.betaYH = j.at("betaYH").get<double>();
    c.betaYX = vecFromJson(j.at("betaYX"));
    c.betaYAX = vecFromJson(j.at("betaYAX"));
    return c;
}

}  // namespace extval::sim
