#include "extval/glm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace extval::glm {

namespace {

double softThreshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// log(1 + exp(-m)) without overflow.
double logistic_loss(double margin) {
    if (margin > 0.0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

}  // namespace

LinearModel train(const Sample& sample, double alphaL1, double alphaL2, int maxIter,
                  double tol, std::uint64_t /*seed*/) {
    sample.validate();
    const Eigen::Index n = sample.n();
    const Eigen::Index p = sample.p();
    {
        double prev = sample.outcomes.mean();
        if (prev <= 0.0 || prev >= 1.0)
            throw std::invalid_argument("both outcome classes must be present");
    }
    const Eigen::MatrixXd& X = sample.features;
    const Eigen::VectorXd& y = sample.outcomes;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double b0 = 0.0;

    // Smooth part: mean NLL + (alphaL2/2)||beta||^2; the L1 term goes through
    // the prox.
    auto smooth = [&](const Eigen::VectorXd& b, double intercept) {
        Eigen::VectorXd margin = X * b;
        margin.array() += intercept;
        double nll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double m = margin[i];
            nll += y[i] == 1.0 ? logistic_loss(m) : logistic_loss(-m);
        }
        return nll / static_cast<double>(n) + 0.5 * alphaL2 * b.squaredNorm();
    };
    auto full = [&](const Eigen::VectorXd& b, double intercept) {
        return smooth(b, intercept) + alphaL1 * b.lpNorm<1>();
    };

    LinearModel model;
    model.alphaL1 = alphaL1;
    model.alphaL2 = alphaL2;

    double step = 1.0;
    double objective = full(beta, b0);
    int iter = 0;
    for (; iter < maxIter; ++iter) {
        Eigen::VectorXd margin = X * beta;
        margin.array() += b0;
        Eigen::VectorXd prob(n);
        for (Eigen::Index i = 0; i < n; ++i) prob[i] = 1.0 / (1.0 + std::exp(-margin[i]));
        Eigen::VectorXd resid = prob - y;
        Eigen::VectorXd gradBeta =
            X.transpose() * resid / static_cast<double>(n) + alphaL2 * beta;
        double gradB0 = resid.mean();
        double smoothHere = smooth(beta, b0);

        // Proximal step with backtracking on the quadratic upper bound.
        Eigen::VectorXd betaNew;
        double b0New = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            betaNew.resize(p);
            for (Eigen::Index j = 0; j < p; ++j)
                betaNew[j] = softThreshold(beta[j] - step * gradBeta[j], step * alphaL1);
            b0New = b0 - step * gradB0;
            Eigen::VectorXd db = betaNew - beta;
            double db0 = b0New - b0;
            double quad = smoothHere + gradBeta.dot(db) + gradB0 * db0 +
                          (db.squaredNorm() + db0 * db0) / (2.0 * step);
            if (smooth(betaNew, b0New) <= quad + 1e-15) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        double objectiveNew = full(betaNew, b0New);
        if (objectiveNew > objective) break;  // numerical floor
        double relChange =
            (objective - objectiveNew) / std::max(1.0, std::abs(objective));
        beta = std::move(betaNew);
        b0 = b0New;
        objective = objectiveNew;
        step = std::min(step * 1.25, 1e6);
        if (relChange < tol) {
            model.converged = true;
            model.iterations = iter + 1;
            model.coefficients = beta;
            model.intercept = b0;
            return model;
        }
    }
    model.converged = false;
    model.iterations = iter;
    model.coefficients = beta;
    model.intercept = b0;
    return model;
}

Eigen::VectorXd predictProba(const LinearModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.coefficients.size())
        throw std::invalid_argument("feature dimension does not match model");
    Eigen::VectorXd margin = features * model.coefficients;
    margin.array() += model.intercept;
    Eigen::VectorXd out(margin.size());
    for (Eigen::Index i = 0; i < margin.size(); ++i)
        out[i] = 1.0 / (1.0 + std::exp(-margin[i]));
    return out;
}

void writeModelJson(const std::string& path, const LinearModel& model) {
    nlohmann::json j;
    j["coefficients"] = std::vector<double>(
        model.coefficients.data(), model.coefficients.data() + model.coefficients.size());
    j["intercept"] = model.intercept;
    j["alphaL1"] = model.alphaL1;
    j["alphaL2"] = model.alphaL2;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    out << j.dump(2) << '\n';
}

LinearModel readModelJson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    nlohmann::json j;
    in >> j;
    LinearModel model;
    std::vector<double> coefs = j.at("coefficients").get<std::vector<double>>();
    model.coefficients =
        Eigen::Map<Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
    model.intercept = j.at("intercept").get<double>();
    model.alphaL1 = j.value("alphaL1", 0.0);
    model.alphaL2 = j.value("alphaL2", 0.0);
    return model;
}

}  // namespace extval::glm
