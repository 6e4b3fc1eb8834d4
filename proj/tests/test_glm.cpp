#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "extval/glm.hpp"
#include "extval/rng.hpp"
#include "extval/simulator.hpp"

using namespace extval;
using namespace extval::glm;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Unpenalized mean negative log-likelihood and its gradient, written directly
// from the definition for finite-difference checks.
double nll(const Sample& s, const Eigen::VectorXd& beta, double intercept) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < s.outcomes.size(); ++i) {
        double eta = intercept + s.features.row(i).dot(beta);
        double p = sigmoid(eta);
        p = std::min(std::max(p, 1e-300), 1.0 - 1e-16);
        total += s.outcomes[i] == 1.0 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(s.outcomes.size());
}

Sample smallSample(std::uint64_t seed, Eigen::Index n, int p) {
    sim::SemConfig cfg;
    cfg.p = p;
    cfg.sigmaXAH = 0.0;
    cfg.seed = seed;
    return sim::generate(sim::sampleCoefficients(cfg), n, 0, rng::derive(seed, 9));
}

}  // namespace

TEST_CASE("heavy L1 drives coefficients to zero, intercept to the logit prevalence") {
    Sample s = smallSample(1, 400, 4);
    LinearModel m = train(s, 50.0, 0.0);
    CHECK(m.coefficients.lpNorm<Eigen::Infinity>() < 1e-10);
    double prev = s.outcomes.mean();
    CHECK(m.intercept == doctest::Approx(std::log(prev / (1.0 - prev))).epsilon(1e-4));
}

TEST_CASE("separable two-point problem reaches low training loss") {
    Sample s;
    s.features.resize(2, 1);
    s.features << -1.0, 1.0;
    s.outcomes.resize(2);
    s.outcomes << 0, 1;
    s.featureNames = {"x1"};
    LinearModel m = train(s, 1e-4, 1e-4);
    Eigen::VectorXd p = predictProba(m, s.features);
    double loss = -0.5 * (std::log(p[1]) + std::log(1.0 - p[0]));
    CHECK(loss < 0.1);
    CHECK(m.coefficients[0] > 0.0);
}

TEST_CASE("predictProba closed-form values") {
    LinearModel m;
    m.coefficients = Eigen::VectorXd::Constant(1, 2.0);
    m.intercept = -1.0;
    Eigen::MatrixXd x(3, 1);
    x << 0.0, 0.5, 2.0;
    Eigen::VectorXd p = predictProba(m, x);
    CHECK(p[0] == doctest::Approx(sigmoid(-1.0)).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(sigmoid(3.0)).epsilon(1e-15));
}

TEST_CASE("stationarity: fitted smooth objective gradient vanishes") {
    // With pure L2 the penalized objective is smooth; at the optimum its
    // finite-difference gradient must be ~0 coordinate-wise.
    Sample s = smallSample(2, 500, 3);
    double a2 = 1e-2;
    LinearModel m = train(s, 0.0, a2, 20000, 1e-14);
    auto obj = [&](const Eigen::VectorXd& beta, double b0) {
        return nll(s, beta, b0) + 0.5 * a2 * beta.squaredNorm();
    };
    double h = 1e-6;
    for (Eigen::Index j = 0; j < 3; ++j) {
        Eigen::VectorXd up = m.coefficients, dn = m.coefficients;
        up[j] += h;
        dn[j] -= h;
        double g = (obj(up, m.intercept) - obj(dn, m.intercept)) / (2.0 * h);
        CHECK(std::abs(g) < 1e-6);
    }
    double g0 = (obj(m.coefficients, m.intercept + h) - obj(m.coefficients, m.intercept - h)) /
                (2.0 * h);
    CHECK(std::abs(g0) < 1e-6);
}

TEST_CASE("training strictly reduces the loss relative to the null model") {
    Sample s = smallSample(3, 600, 4);
    LinearModel m = train(s);
    CHECK(m.converged);
    double fitted = nll(s, m.coefficients, m.intercept);
    double prev = s.outcomes.mean();
    double null = nll(s, Eigen::VectorXd::Zero(4), std::log(prev / (1.0 - prev)));
    CHECK(fitted < null);
}

TEST_CASE("default penalties keep the fit close to the lightly penalized one") {
    Sample s = smallSample(4, 2000, 4);
    LinearModel tight = train(s, 1e-3, 1e-3);
    LinearModel loose = train(s, 1e-5, 1e-5);
    CHECK((tight.coefficients - loose.coefficients).lpNorm<Eigen::Infinity>() < 0.1);
}

TEST_CASE("model JSON round trip") {
    Sample s = smallSample(5, 300, 3);
    LinearModel m = train(s);
    std::string path = "glm_model_roundtrip.json";
    writeModelJson(path, m);
    LinearModel r = readModelJson(path);
    CHECK((r.coefficients.array() == m.coefficients.array()).all());
    CHECK(r.intercept == m.intercept);
    CHECK(r.alphaL1 == m.alphaL1);
    CHECK(r.alphaL2 == m.alphaL2);
    std::remove(path.c_str());
}
