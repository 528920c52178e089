#pragma once

// Small Levenberg-Marquardt least-squares solver over Eigen vectors.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace eoq {

/// Raised when an iterative fit fails to converge; carries residual diagnostics.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, double residual_norm, int iterations)
        : std::runtime_error(describe(what, residual_norm, iterations)),
          residual_norm(residual_norm),
          iterations(iterations) {}

    double residual_norm;
    int iterations;

private:
    static std::string describe(const std::string& what, double r, int it) {
        std::ostringstream os;
        os << what << " (residual norm " << r << " after " << it << " iterations)";
        return os.str();
    }
};

struct LmOptions {
    int max_iterations = 400;
    double rel_tolerance = 1e-10;  // on the sum of squared residuals
    double step_tolerance = 1e-13;
    // Applied to every trial point, e.g. to clamp parameters into a domain.
    std::function<void(Eigen::VectorXd&)> project;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double chi2 = 0.0;
    int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& p, const Eigen::VectorXd& r0) {
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (int k = 0; k < p.size(); ++k) {
        Eigen::VectorXd q = p;
        double h = 1e-7 * std::max(std::abs(p(k)), 1e-3);
        q(k) += h;
        h = q(k) - p(k);
        jac.col(k) = (f(q) - r0) / h;
    }
    return jac;
}

/// Minimises |f(p)|^2 from `start`. Throws FitError on non-convergence.
inline LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd start, const LmOptions& opt = {}) {
    if (opt.project) opt.project(start);
    Eigen::VectorXd p = start;
    Eigen::VectorXd r = f(p);
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2)) throw FitError("non-finite residuals at the starting point", chi2, 0);
    double lambda = 1e-3;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        Eigen::MatrixXd jac = numeric_jacobian(f, p, r);
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(chi2, 1e-300) || chi2 == 0.0) break;

        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (int k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            Eigen::VectorXd step = a.ldlt().solve(-g);
            Eigen::VectorXd trial = p + step;
            if (opt.project) {
                opt.project(trial);
                // Pin clamped components at the bound and re-solve for the rest;
                // otherwise the coupled step crawls along the boundary.
                std::vector<int> pinned;
                for (int k = 0; k < p.size(); ++k)
                    if (std::abs(trial(k) - (p(k) + step(k))) > 1e-14 * (1.0 + std::abs(p(k)))) pinned.push_back(k);
                if (!pinned.empty() && static_cast<int>(pinned.size()) < p.size()) {
                    Eigen::VectorXd fixed_step = Eigen::VectorXd::Zero(p.size());
                    for (int k : pinned) fixed_step(k) = trial(k) - p(k);
                    Eigen::VectorXd rhs = -g - a * fixed_step;
                    for (int k : pinned) {
                        a.row(k).setZero();
                        a.col(k).setZero();
                        a(k, k) = 1.0;
                        rhs(k) = 0.0;
                    }
                    trial = p + fixed_step + a.ldlt().solve(rhs);
                    opt.project(trial);
                }
            }
            Eigen::VectorXd rt = f(trial);
            double chi2t = rt.squaredNorm();
            if (std::isfinite(chi2t) && chi2t <= chi2) {
                double rel = (chi2 - chi2t) / std::max(chi2, 1e-300);
                double step_rel = (trial - p).norm() / std::max(p.norm(), 1e-300);
                p = trial;
                r = rt;
                chi2 = chi2t;
                lambda = std::max(lambda * 0.2, 1e-12);
                accepted = true;
                if (rel < opt.rel_tolerance || step_rel < opt.step_tolerance) {
                    return {p, r, numeric_jacobian(f, p, r), chi2, it + 1};
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;  // no downhill step at any damping: stationary point
    }
    if (it >= opt.max_iterations) throw FitError("least-squares fit did not converge", std::sqrt(chi2), it);
    return {p, r, numeric_jacobian(f, p, r), chi2, it};
}

/// (J^T J)^-1 via a rank-revealing decomposition.
inline Eigen::MatrixXd normal_covariance(const Eigen::MatrixXd& jac) {
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    return jtj.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace eoq
