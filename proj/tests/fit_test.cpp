#include "eoq/fit.hpp"

#include <cmath>

#include "gtest/gtest.h"

using namespace eoq;

TEST(fit, unconstrained_exponential) {
    ResidualFn f = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(20);
        for (int i = 0; i < 20; ++i) r(i) = p(0) * std::exp(-p(1) * i) - 2.0 * std::exp(-0.3 * i);
        return r;
    };
    Eigen::VectorXd start(2);
    start << 1.0, 0.1;
    auto res = levenberg_marquardt(f, start);
    EXPECT_NEAR(res.params(0), 2.0, 1e-8);
    EXPECT_NEAR(res.params(1), 0.3, 1e-8);
}

TEST(fit, converges_on_an_active_bound) {
    // Convex data fitted with a saturating curve: the optimum sits at k = 0,
    // i.e. a straight line through the origin.
    std::vector<double> x, y;
    for (int i = 1; i <= 9; ++i) {
        x.push_back(std::pow(2.0, i - 1));
        y.push_back(1e-5 * x.back() + 1e-7 * x.back() * x.back());
    }
    ResidualFn f = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double sat = p(1) < 1e-14 ? x[i] : -std::expm1(x[i] * std::log1p(-p(1))) / p(1);
            r(i) = (p(0) * sat - y[i]) / (1e-6 * (1 + i));
        }
        return r;
    };
    LmOptions opt;
    opt.project = [](Eigen::VectorXd& p) { p(1) = std::clamp(p(1), 0.0, 1.0 - 1e-12); };
    Eigen::VectorXd start(2);
    start << 1e-5, 1e-3;
    auto res = levenberg_marquardt(f, start, opt);
    EXPECT_EQ(res.params(1), 0.0);
    EXPECT_LT(res.iterations, 100);
    // Slope of the weighted line fit through the origin.
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double w = 1.0 / std::pow(1e-6 * (1 + i), 2);
        sxy += w * x[i] * y[i], sxx += w * x[i] * x[i];
    }
    EXPECT_NEAR(res.params(0), sxy / sxx, 1e-6 * sxy / sxx);
}

TEST(fit, reports_non_convergence) {
    ResidualFn f = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2);
        r << 10 * (p(1) - p(0) * p(0)), 1 - p(0);
        return r;
    };
    LmOptions opt;
    opt.max_iterations = 2;
    Eigen::VectorXd start(2);
    start << -1.2, 1.0;
    try {
        levenberg_marquardt(f, start, opt);
        FAIL() << "expected FitError";
    } catch (const FitError& e) {
        EXPECT_EQ(e.iterations, 2);
        EXPECT_GT(e.residual_norm, 0.0);
    }
}
