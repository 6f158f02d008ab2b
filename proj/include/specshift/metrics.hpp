#pragma once

// Evaluation metrics for the synthetic experiments.
//
// For finite-rank kernels the excess risk has a closed form: the basis is
// orthonormal in L2 of the uniform test distribution, so with fitted
// expansion d and target expansion d*,
//
//   || f_hat - f* ||^2_{L2(test)} = sum_k (d_k - d*_k)^2,
//
// exactly -- no Monte Carlo noise pollutes the measured convergence rates.
// A Monte Carlo risk is provided for kernels without an expansion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/estimator.hpp"
#include "specshift/kernels.hpp"
#include "specshift/rng.hpp"
#include "specshift/synthetic.hpp"

namespace specshift {

// N(lambda) = sum_k mu_k / (lambda + mu_k), the effective dimension.
inline double effective_dimension(const std::vector<double>& mu, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw contract_error("effective_dimension: lambda must be finite and > 0");
    }
    if (mu.empty()) throw contract_error("effective_dimension: empty spectrum");
    double acc = 0.0;
    for (double m : mu) {
        if (!(m >= 0.0) || !std::isfinite(m)) {
            throw contract_error("effective_dimension: eigenvalues must be finite and >= 0");
        }
        acc += m / (lambda + m);
    }
    return acc;
}

inline double effective_dimension(const KernelSpec& kernel, double lambda) {
    if (!kernel.is_basis()) {
        throw contract_error("effective_dimension: requires a finite-rank kernel");
    }
    return effective_dimension(kernel.eigenvalues(), lambda);
}

// Exact excess risk against the synthetic target.  The estimator must have
// been fitted with the problem's own kernel (same spectrum), otherwise the
// expansions are not comparable coordinate systems.
inline double excess_risk_exact(const SpectralEstimator& est, const SyntheticProblem& p) {
    if (!(est.kernel() == p.kernel)) {
        throw contract_error("excess_risk_exact: estimator kernel differs from problem kernel");
    }
    const auto& d = est.basis_expansion();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.m; ++k) {
        const double diff = d[k] - p.target_coeffs[k];
        acc += diff * diff;
    }
    return acc;
}

// Monte Carlo excess risk over uniform test draws; works for any kernel.
inline double excess_risk_mc(const SpectralEstimator& est, const SyntheticProblem& p,
                             std::size_t points, std::uint64_t seed) {
    if (points == 0) throw contract_error("excess_risk_mc: need at least one test point");
    rng_stream rs(seed);
    double acc = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = rs.uniform_open0();
        const double diff = est.predict(x) - f_rho_eval(p, x);
        acc += diff * diff;
    }
    return acc / static_cast<double>(points);
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw contract_error("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RatePoint {
    std::size_t n = 0;
    double risk = 0.0;
};

struct RateFit {
    double slope = 0.0;      // d log(median risk) / d log n
    double stderr_ = 0.0;    // OLS standard error of the slope
    double intercept = 0.0;  // log-risk at log n = 0
    std::size_t levels = 0;  // distinct n values entering the regression
};

// Log-log regression of per-n median risk on n.  Medians (not means) so a
// handful of hard cells cannot drag the measured rate.
inline RateFit estimate_rate(const std::vector<RatePoint>& samples) {
    std::map<std::size_t, std::vector<double>> groups;
    for (const auto& s : samples) {
        if (s.n == 0) throw contract_error("estimate_rate: n must be >= 1");
        if (!(s.risk > 0.0) || !std::isfinite(s.risk)) {
            throw contract_error("estimate_rate: risks must be finite and > 0");
        }
        groups[s.n].push_back(s.risk);
    }
    if (groups.size() < 2) {
        throw contract_error("estimate_rate: need at least two distinct n levels");
    }
    std::vector<double> xs, ys;
    for (auto& [n, risks] : groups) {
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(median(std::move(risks))));
    }
    const auto k = static_cast<double>(xs.size());
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= k;
    ybar /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    RateFit fit;
    fit.levels = xs.size();
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    if (xs.size() > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
            sse += e * e;
        }
        fit.stderr_ = std::sqrt(sse / (k - 2.0) / sxx);
    } else {
        fit.stderr_ = std::numeric_limits<double>::infinity();
    }
    return fit;
}

}  // namespace specshift
