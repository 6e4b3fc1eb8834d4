#include "extval/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace extval::balancer {

const char* statusName(SolveStatus s) {
    switch (s) {
        case SolveStatus::Exact: return "Exact";
        case SolveStatus::Relaxed: return "Relaxed";
        case SolveStatus::Infeasible: return "Infeasible";
    }
    return "?";
}

namespace {

constexpr double kExpCap = 700.0;  // keep exp() finite during line search

double safeExp(double x) { return std::exp(std::min(x, kExpCap)); }

double klToUniform(const Eigen::VectorXd& w) {
    const double n = static_cast<double>(w.size());
    double kl = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) kl += w[i] * std::log(n * w[i]);
    return std::max(kl, 0.0);
}

// z columns shifted/scaled to zero mean and unit SD, with a trailing ones
// column; the target is mapped by the same affine change. Weights are
// invariant to it, the Newton system is much better conditioned.
struct Standardized {
    Eigen::MatrixXd A;      // n x (k+1)
    Eigen::VectorXd d;      // k+1
    Eigen::VectorXd mean;   // k
    Eigen::VectorXd scale;  // k
};

Standardized standardize(const TransformedMatrix& z, const MomentTarget& target,
                         bool requireNonConstant) {
    const Eigen::Index n = z.z.rows();
    const Eigen::Index k = z.z.cols();
    if (target.values.size() != k)
        throw std::invalid_argument("target length does not match transformed columns");

    Standardized s;
    s.A.resize(n, k + 1);
    s.d.resize(k + 1);
    s.mean.resize(k);
    s.scale.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double m = z.z.col(j).mean();
        double sd = std::sqrt((z.z.col(j).array() - m).square().sum() / static_cast<double>(n));
        if (sd < 1e-300) {
            if (requireNonConstant)
                throw std::invalid_argument("constant column " + std::to_string(j) +
                                            " must be pruned before solving");
            sd = 1.0;
        }
        s.mean[j] = m;
        s.scale[j] = sd;
        s.A.col(j) = (z.z.col(j).array() - m) / sd;
        s.d[j] = (target.values[j] - m) / sd;
    }
    s.A.col(k).setOnes();
    s.d[k] = 1.0;
    return s;
}

Eigen::VectorXd toOriginalDual(const Standardized& s, const Eigen::VectorXd& nu) {
    const Eigen::Index k = s.mean.size();
    Eigen::VectorXd out(k + 1);
    double shift = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        out[j] = nu[j] / s.scale[j];
        shift += s.mean[j] * nu[j] / s.scale[j];
    }
    out[k] = nu[k] - shift;
    return out;
}

struct DualResult {
    Eigen::VectorXd nu;  // standardized coordinates
    Eigen::VectorXd w;
    int iterations = 0;
    bool converged = false;
};

// Damped Newton on the smooth convex dual
//   q(nu) = d' nu + lambda * sum_i exp((a_i - A_i nu) / lambda - 1),
// whose stationary point recovers w_i = exp((a_i - A_i nu)/lambda - 1) with
// A' w = d. Levenberg-style diagonal damping plus Armijo backtracking.
DualResult solveDual(const Eigen::MatrixXd& A, const Eigen::VectorXd& d,
                     const Eigen::VectorXd& offsets, double lambda, double gradTol,
                     int maxIter) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = A.cols();

    auto weightsAt = [&](const Eigen::VectorXd& nu) {
        Eigen::VectorXd e = (offsets - A * nu) / lambda;
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w[i] = safeExp(e[i] - 1.0);
        return w;
    };
    auto objective = [&](const Eigen::VectorXd& nu) {
        return d.dot(nu) + lambda * weightsAt(nu).sum();
    };

    // Start at the uniform-weight point: nu = 0 except the normalization
    // coordinate, set by log-sum-exp of the offsets.
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);
    {
        double amax = offsets.size() > 0 ? offsets.maxCoeff() : 0.0;
        double lse = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) lse += std::exp((offsets[i] - amax) / lambda);
        nu[m - 1] = amax - lambda + lambda * std::log(lse);
    }

    DualResult res;
    Eigen::VectorXd w = weightsAt(nu);
    double q = d.dot(nu) + lambda * w.sum();
    double damp = 0.0;

    // Large lambda flattens the dual; below this scale the Armijo test cannot
    // certify descent against objective roundoff, so loosen accordingly.
    const double effTol = std::max(gradTol, 1e-12 * lambda);

    for (int iter = 0; iter < maxIter; ++iter) {
        Eigen::VectorXd grad = d - A.transpose() * w;
        res.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= effTol) {
            res.converged = true;
            break;
        }
        Eigen::MatrixXd H = (A.transpose() * w.asDiagonal() * A) / lambda;

        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            Eigen::MatrixXd Hd = H;
            if (damp > 0.0) Hd.diagonal().array() += damp;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
            Eigen::VectorXd delta;
            bool ok = ldlt.info() == Eigen::Success;
            if (ok) {
                delta = ldlt.solve(-grad);
                ok = delta.allFinite() && grad.dot(delta) < 0.0;
            }
            if (!ok) {
                damp = damp == 0.0 ? 1e-10 * (1.0 + H.diagonal().maxCoeff()) : damp * 10.0;
                continue;
            }
            double slope = grad.dot(delta);
            double step = 1.0;
            while (step > 1e-14) {
                Eigen::VectorXd cand = nu + step * delta;
                double qc = objective(cand);
                if (std::isfinite(qc) && qc <= q + 1e-4 * step * slope) {
                    nu = cand;
                    q = qc;
                    w = weightsAt(nu);
                    stepped = true;
                    damp *= 0.25;
                    if (damp < 1e-14) damp = 0.0;
                    break;
                }
                step *= 0.5;
            }
            if (!stepped)
                damp = damp == 0.0 ? 1e-10 * (1.0 + H.diagonal().maxCoeff()) : damp * 10.0;
        }
        if (!stepped) break;  // no descent direction left
    }

    res.nu = nu;
    res.w = w;
    return res;
}

void fillDiagnostics(WeightSolution& sol, const TransformedMatrix& z,
                     const MomentTarget& target) {
    sol.residual = z.z.transpose() * sol.weights - target.values;
    sol.residualNorm =
        sol.residual.size() > 0 ? sol.residual.lpNorm<Eigen::Infinity>() : 0.0;
    sol.klDivergence = klToUniform(sol.weights);
    double sumsq = sol.weights.squaredNorm();
    sol.effectiveSampleSize = sumsq > 0.0 ? 1.0 / sumsq : 0.0;
    sol.maxWeight = sol.weights.maxCoeff();
}

WeightSolution singleRowSolution(const TransformedMatrix& z, const MomentTarget& target,
                                 const SolverConfig& cfg) {
    WeightSolution sol;
    sol.weights = Eigen::VectorXd::Ones(1);
    sol.dual = Eigen::VectorXd::Zero(z.z.cols() + 1);
    sol.dual[z.z.cols()] = -1.0;  // exp(-1 - nu_last) = 1
    fillDiagnostics(sol, z, target);
    sol.status =
        sol.residualNorm <= cfg.residualTol ? SolveStatus::Exact : SolveStatus::Infeasible;
    return sol;
}

}  // namespace

std::vector<Violation> feasibilityCheck(const TransformedMatrix& z,
                                        const MomentTarget& target) {
    if (target.values.size() != z.z.cols())
        throw std::invalid_argument("target length does not match transformed columns");
    std::vector<Violation> out;
    for (Eigen::Index j = 0; j < z.z.cols(); ++j) {
        double lo = z.z.col(j).minCoeff();
        double hi = z.z.col(j).maxCoeff();
        double t = target.values[j];
        double eps = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
        if (t < lo - eps || t > hi + eps) out.push_back({j, lo, hi, t});
    }
    return out;
}

WeightSolution solveExact(const TransformedMatrix& z, const MomentTarget& target,
                          const SolverConfig& cfg) {
    const Eigen::Index n = z.z.rows();
    const Eigen::Index k = z.z.cols();
    if (n < 1) throw std::invalid_argument("empty transformed matrix");
    if (n == 1) return singleRowSolution(z, target, cfg);
    if (k + 1 > n)
        throw std::invalid_argument("underdetermined: need k + 1 <= n");

    Standardized s = standardize(z, target, /*requireNonConstant=*/true);
    DualResult dual = solveDual(s.A, s.d, Eigen::VectorXd::Zero(n), /*lambda=*/1.0,
                                cfg.gradTol, cfg.maxNewtonIter);

    WeightSolution sol;
    double total = dual.w.sum();
    if (!(total > 0.0) || !dual.w.allFinite()) {
        sol.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        sol.dual = Eigen::VectorXd::Zero(k + 1);
        fillDiagnostics(sol, z, target);
        sol.status = SolveStatus::Infeasible;
        sol.convergence = {dual.iterations, true};
        return sol;
    }
    sol.weights = dual.w / total;
    // Fold the renormalization into the normalization multiplier so the
    // exponential form w_i = exp(-1 - (z_i,1) nu) stays bit-consistent.
    Eigen::VectorXd nu = dual.nu;
    nu[k] += std::log(total);
    sol.dual = toOriginalDual(s, nu);
    fillDiagnostics(sol, z, target);
    sol.convergence = {dual.iterations, !dual.converged};
    // A stalled Newton iterate can still satisfy the constraints to working
    // precision; status follows the residual, the stall stays as a warning.
    sol.status = sol.residualNorm <= cfg.residualTol ? SolveStatus::Exact
                                                     : SolveStatus::Infeasible;
    return sol;
}

WeightSolution solveRelaxed(const TransformedMatrix& z, const MomentTarget& target,
                            const SolverConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("relaxed solve needs lambda > 0");
    const Eigen::Index n = z.z.rows();
    const Eigen::Index k = z.z.cols();
    if (n < 1) throw std::invalid_argument("empty transformed matrix");

    Standardized s = standardize(z, target, /*requireNonConstant=*/false);
    const Eigen::MatrixXd Zs = s.A.leftCols(k);
    const Eigen::VectorXd mu = s.d.head(k);
    const double lambda = cfg.lambda;
    const double logn = std::log(static_cast<double>(n));

    auto objective = [&](const Eigen::VectorXd& w, const Eigen::VectorXd& r) {
        double kl = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (w[i] > 0.0) kl += w[i] * (std::log(w[i]) + logn);
        return r.squaredNorm() + lambda * kl;
    };

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd r = Zs.transpose() * w - mu;
    double f = objective(w, r);

    WeightSolution sol;
    sol.objectiveTrace.push_back(f);

    const bool backtrack = cfg.mirrorStepRule == SolverConfig::StepRule::Backtracking;
    double eta = backtrack ? 1.0 : cfg.mirrorFixedStep;
    bool converged = false;
    int iter = 0;
    for (; iter < cfg.maxMirrorIter; ++iter) {
        Eigen::VectorXd grad = 2.0 * (Zs * r);
        for (Eigen::Index i = 0; i < n; ++i)
            grad[i] += lambda * (std::log(std::max(w[i], 1e-300)) + logn + 1.0);

        // Multiplicative update with renormalization; shrink the step until
        // the objective decreases.
        bool accepted = false;
        double tryEta = eta;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXd logw(n);
            for (Eigen::Index i = 0; i < n; ++i)
                logw[i] = std::log(std::max(w[i], 1e-300)) - tryEta * grad[i];
            double mx = logw.maxCoeff();
            Eigen::VectorXd cand = (logw.array() - mx).exp();
            cand /= cand.sum();
            Eigen::VectorXd rc = Zs.transpose() * cand - mu;
            double fc = objective(cand, rc);
            if (std::isfinite(fc) && fc < f) {
                double decrease = f - fc;
                w = std::move(cand);
                r = std::move(rc);
                f = fc;
                sol.objectiveTrace.push_back(f);
                accepted = true;
                if (backtrack) eta = std::min(tryEta * 2.0, 1e6);
                if (decrease < 1e-12) converged = true;
                break;
            }
            if (!backtrack) break;
            tryEta *= 0.5;
        }
        if (!accepted || converged) {
            converged = converged || !accepted;
            break;
        }
    }

    sol.weights = w;
    // Implied exponential-form multipliers at the (near-)stationary point:
    // log w_i = -(2/lambda) z_i . r + const.
    Eigen::VectorXd nu(k + 1);
    nu.head(k) = (2.0 / lambda) * r;
    {
        Eigen::VectorXd e = -(Zs * nu.head(k));
        double mx = e.maxCoeff();
        double lse = (e.array() - mx).exp().sum();
        nu[k] = mx + std::log(lse) - 1.0;
    }
    sol.dual = toOriginalDual(s, nu);
    fillDiagnostics(sol, z, target);
    sol.convergence = {iter, !converged};
    sol.status =
        sol.residualNorm <= cfg.residualTol ? SolveStatus::Exact : SolveStatus::Relaxed;
    return sol;
}

WeightSolution solve(const TransformedMatrix& z, const MomentTarget& target,
                     const SolverConfig& cfg) {
    std::vector<Violation> violations = feasibilityCheck(z, target);

    WeightSolution sol;
    if (!violations.empty()) {
        sol = solveRelaxed(z, target, cfg);
    } else {
        sol = solveExact(z, target, cfg);
        if (sol.status != SolveStatus::Exact) sol = solveRelaxed(z, target, cfg);
    }
    sol.violations = std::move(violations);

    if (cfg.minWeight > 0.0 && sol.weights.minCoeff() < cfg.minWeight) {
        sol.weights = sol.weights.cwiseMax(cfg.minWeight);
        sol.weights /= sol.weights.sum();
        fillDiagnostics(sol, z, target);
        if (sol.status != SolveStatus::Infeasible)
            sol.status = sol.residualNorm <= cfg.residualTol ? SolveStatus::Exact
                                                             : SolveStatus::Relaxed;
    }
    return sol;
}

WorstCaseResult worstCaseBound(const TransformedMatrix& z, const MomentTarget& target,
                               const Eigen::VectorXd& losses, double lambda,
                               const SolverConfig& cfg) {
    const Eigen::Index n = z.z.rows();
    const Eigen::Index k = z.z.cols();
    if (losses.size() != n) throw std::invalid_argument("losses length must equal rows");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (losses.minCoeff() < 0.0) throw std::invalid_argument("losses must be nonnegative");
    if (k > 0) {
        WeightSolution feas = solveExact(z, target, cfg);
        if (feas.status != SolveStatus::Exact)
            throw std::runtime_error(
                "target is not exactly attainable; use solveRelaxed-based estimation");
    }

    Standardized s = standardize(z, target, /*requireNonConstant=*/k > 0);
    DualResult dual = solveDual(s.A, s.d, losses, lambda, cfg.gradTol, cfg.maxNewtonIter);
    if (!dual.converged)
        throw std::runtime_error("worst-case dual did not converge");

    WorstCaseResult out;
    double total = dual.w.sum();
    out.solution.weights = dual.w / total;
    Eigen::VectorXd nu = dual.nu;
    nu[k] += lambda * std::log(total);
    out.solution.dual = toOriginalDual(s, nu);
    fillDiagnostics(out.solution, z, target);
    out.solution.convergence = {dual.iterations, false};
    out.solution.status = out.solution.residualNorm <= cfg.residualTol
                              ? SolveStatus::Exact
                              : SolveStatus::Infeasible;
    if (out.solution.status != SolveStatus::Exact)
        throw std::runtime_error(
            "target is not exactly attainable; use solveRelaxed-based estimation");
    out.bound = out.solution.weights.dot(losses);
    out.regularizedObjective = out.bound - lambda * out.solution.klDivergence;
    return out;
}

}  // namespace extval::balancer
