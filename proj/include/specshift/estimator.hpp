#pragma once

// Weighted spectral regression.
//
// Given data (x_i, y_i) with importance weights v_i (raw, normalized, or
// clipped density ratios, or all ones), a kernel K and a filter g_lambda,
// the estimator is
//
//   f(x) = (1/n) sum_i s_i c_i K(x, x_i),   s_i = sqrt(v_i),
//
// where c = g_{lambda'}(M') (s .* y) / rho with the n x n reduction
// M = (1/n) diag(s) K diag(s).  The operator is rescaled by
// rho = kappa^2 max_i v_i so that spec(M') = spec(M/rho) lies in [0,1], the
// domain on which the filters are defined; lambda' = lambda/rho.  Tikhonov
// and cutoff are exactly invariant under this rescaling.  Landweber is
// *defined* on the rescaled problem: its lambda argument is 1/t on the unit
// spectrum (equivalently, gradient descent on M with step 1/rho).
//
// Two evaluation paths produce the same coefficients:
//   * dense: eigendecomposition of the n x n matrix M' (any kernel);
//   * factored: for finite-rank kernels, M = A A^T with the n x m factor
//     A = (1/sqrt(n)) diag(s) Phi diag(sqrt(mu)), so the spectrum comes from
//     the m x m Gram A^T A.  This is the default for truncated-basis kernels
//     and is what makes large-n simulation sweeps affordable.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specshift/errors.hpp"
#include "specshift/filters.hpp"
#include "specshift/kernels.hpp"
#include "specshift/shift_weights.hpp"

namespace specshift {

struct Dataset {
    std::vector<double> x;            // points in (0,1]
    std::vector<double> y;            // responses
    std::vector<double> raw_weights;  // density-ratio values at x; may be empty
                                      // when only the unweighted scheme is used
    std::size_t size() const { return x.size(); }
};

enum class WeightSchemeKind { unweighted, exact, normalized, clipped };

inline const char* to_string(WeightSchemeKind k) {
    switch (k) {
        case WeightSchemeKind::unweighted: return "unweighted";
        case WeightSchemeKind::exact: return "exact";
        case WeightSchemeKind::normalized: return "normalized";
        case WeightSchemeKind::clipped: return "clipped";
    }
    return "?";
}

struct WeightScheme {
    WeightSchemeKind kind = WeightSchemeKind::unweighted;
    double clip_threshold = 0.0;  // > 1 when kind == clipped

    static WeightScheme unweighted() { return {WeightSchemeKind::unweighted, 0.0}; }
    static WeightScheme exact() { return {WeightSchemeKind::exact, 0.0}; }
    static WeightScheme normalized() { return {WeightSchemeKind::normalized, 0.0}; }
    static WeightScheme clipped(double threshold) { return {WeightSchemeKind::clipped, threshold}; }
};

namespace detail {

inline void validate_dataset(const Dataset& data, bool need_weights) {
    const std::size_t n = data.size();
    if (n == 0) throw contract_error("fit: empty dataset");
    if (data.y.size() != n) throw contract_error("fit: x/y length mismatch");
    for (double xi : data.x) {
        if (!std::isfinite(xi) || xi <= 0.0 || xi > 1.0) {
            throw contract_error("fit: points must be finite and lie in (0,1]");
        }
    }
    for (double yi : data.y) {
        if (!std::isfinite(yi)) throw contract_error("fit: non-finite response");
    }
    if (need_weights && data.raw_weights.size() != n) {
        throw contract_error("fit: weighted scheme requires one raw weight per point");
    }
    if (!data.raw_weights.empty() && data.raw_weights.size() != n) {
        throw contract_error("fit: raw weight vector has wrong length");
    }
}

}  // namespace detail

// Per-point effective weights under a scheme.  The unweighted scheme is all
// ones regardless of raw weights; under no shift (raw weights identically 1)
// every scheme reproduces exactly the same vector, bit for bit.
inline std::vector<double> effective_weights(const Dataset& data, const WeightScheme& scheme) {
    detail::validate_dataset(data, scheme.kind != WeightSchemeKind::unweighted);
    switch (scheme.kind) {
        case WeightSchemeKind::unweighted:
            return std::vector<double>(data.size(), 1.0);
        case WeightSchemeKind::exact:
            for (double w : data.raw_weights) {
                if (!std::isfinite(w) || w < 0.0) {
                    throw contract_error("fit: exact scheme requires finite nonnegative weights");
                }
            }
            return data.raw_weights;
        case WeightSchemeKind::normalized:
            return normalize_weights(data.raw_weights);
        case WeightSchemeKind::clipped:
            return clip_weights(data.raw_weights, scheme.clip_threshold);
    }
    throw contract_error("fit: unknown weight scheme");
}

class SpectralEstimator {
  public:
    SpectralEstimator(std::vector<double> anchors, std::vector<double> sqrt_weights,
                      std::vector<double> coefficients, KernelSpec kernel, double rescale,
                      double lambda_effective)
        : anchors_(std::move(anchors)),
          sqrt_weights_(std::move(sqrt_weights)),
          coefficients_(std::move(coefficients)),
          kernel_(std::move(kernel)),
          rescale_(rescale),
          lambda_effective_(lambda_effective) {
        const std::size_t n = anchors_.size();
        if (n == 0 || sqrt_weights_.size() != n || coefficients_.size() != n) {
            throw contract_error("estimator: anchor/weight/coefficient length mismatch");
        }
        if (!(rescale_ > 0.0) || !std::isfinite(rescale_)) {
            throw contract_error("estimator: rescale factor must be finite and > 0");
        }
        if (kernel_.is_basis()) build_expansion();
    }

    const std::vector<double>& anchors() const { return anchors_; }
    const std::vector<double>& sqrt_weights() const { return sqrt_weights_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    const KernelSpec& kernel() const { return kernel_; }
    double rescale() const { return rescale_; }
    double lambda_effective() const { return lambda_effective_; }

    bool has_basis_expansion() const { return !expansion_.empty(); }

    // Coefficients d_k of f = sum_k d_k phi_k for finite-rank kernels:
    // d_k = mu_k (1/n) sum_i s_i c_i phi_k(x_i).
    const std::vector<double>& basis_expansion() const {
        if (expansion_.empty()) throw contract_error("basis_expansion: not a finite-rank kernel");
        return expansion_;
    }

    double predict(double x) const {
        if (!std::isfinite(x)) throw std::domain_error("predict: non-finite point");
        if (!expansion_.empty()) {
            const std::size_t m = expansion_.size();
            std::vector<double> row(m);
            basis_row(x, m, row.data());
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) acc += expansion_[k] * row[k];
            return acc;
        }
        const std::size_t n = anchors_.size();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += sqrt_weights_[i] * coefficients_[i] * kernel_(x, anchors_[i]);
        }
        return acc / static_cast<double>(n);
    }

    std::vector<double> predict(const std::vector<double>& xs) const {
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict(xs[i]);
        return out;
    }

  private:
    void build_expansion() {
        const auto& mu = kernel_.eigenvalues();
        const std::size_t m = mu.size();
        const std::size_t n = anchors_.size();
        expansion_.assign(m, 0.0);
        std::vector<double> row(m);
        for (std::size_t i = 0; i < n; ++i) {
            basis_row(anchors_[i], m, row.data());
            const double sc = sqrt_weights_[i] * coefficients_[i];
            for (std::size_t k = 0; k < m; ++k) expansion_[k] += sc * row[k];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t k = 0; k < m; ++k) expansion_[k] *= mu[k] * inv_n;
    }

    std::vector<double> anchors_;
    std::vector<double> sqrt_weights_;
    std::vector<double> coefficients_;
    KernelSpec kernel_;
    double rescale_;
    double lambda_effective_;
    std::vector<double> expansion_;
};

struct FitOptions {
    bool force_dense = false;  // bypass the finite-rank factored path (cross-checks)
};

namespace detail {

// Clamp tiny negative eigenvalues produced by round-off; anything below the
// tolerance is a genuine PSD violation and aborts the fit.
inline void clamp_spectrum(Eigen::VectorXd& theta) {
    const double scale = theta.size() ? theta.cwiseAbs().maxCoeff() : 0.0;
    const double tol = 1e-8 * std::max(scale, 1e-300);
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (theta(i) < 0.0) {
            if (theta(i) < -tol) {
                throw numeric_error("fit: operator eigenvalue below -1e-8 * norm; not PSD");
            }
            theta(i) = 0.0;
        }
    }
}

struct Prepared {
    std::vector<double> v;  // effective weights
    Eigen::VectorXd s;      // sqrt(v)
    Eigen::VectorXd z;      // s .* y
    double rho = 0.0;       // kappa^2 * max(v)
};

inline Prepared prepare(const Dataset& data, const KernelSpec& kernel, const WeightScheme& scheme) {
    Prepared p;
    p.v = effective_weights(data, scheme);
    double maxv = 0.0;
    for (double vi : p.v) {
        if (!std::isfinite(vi) || vi < 0.0) {
            throw contract_error("fit: effective weights must be finite and >= 0");
        }
        maxv = std::max(maxv, vi);
    }
    if (maxv <= 0.0) throw contract_error("fit: degenerate weights (all zero)");
    const double kappa = kernel.kappa();
    p.rho = kappa * kappa * maxv;
    const auto n = static_cast<Eigen::Index>(data.size());
    p.s.resize(n);
    p.z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        p.s(i) = std::sqrt(p.v[static_cast<std::size_t>(i)]);
        p.z(i) = p.s(i) * data.y[static_cast<std::size_t>(i)];
    }
    return p;
}

// lambda on the rescaled [0,1] spectrum, validating the filter contract.
inline double rescaled_lambda(const FilterSpec& filter, double lambda, double rho) {
    if (!std::isfinite(lambda) || lambda <= 0.0) {
        throw contract_error("fit: lambda must be finite and > 0");
    }
    if (filter.kind() == FilterKind::landweber) {
        const double expected = 1.0 / static_cast<double>(filter.steps());
        if (std::abs(lambda - expected) > 1e-12) {
            throw contract_error("fit: Landweber lambda is bound to 1/t on the rescaled spectrum");
        }
        return expected;
    }
    const double lp = lambda / rho;
    if (lp > FilterSpec::domain_cap * (1.0 + 1e-12)) {
        throw contract_error("fit: lambda exceeds the rescaled spectral range (0, rho]");
    }
    return lp;
}

}  // namespace detail

inline SpectralEstimator fit(const Dataset& data, const KernelSpec& kernel,
                             const FilterSpec& filter, double lambda, const WeightScheme& scheme,
                             const FitOptions& opts = {}) {
    auto p = detail::prepare(data, kernel, scheme);
    const double lambda_p = detail::rescaled_lambda(filter, lambda, p.rho);
    const auto n = static_cast<Eigen::Index>(data.size());
    const double g0 = filter.apply(lambda_p, 0.0);

    Eigen::VectorXd c;
    if (kernel.is_basis() && !opts.force_dense) {
        // Factored path: M' = A' A'^T with A' n x m; spectrum from A'^T A'.
        const auto& mu = kernel.eigenvalues();
        const auto m = static_cast<Eigen::Index>(mu.size());
        Eigen::MatrixXd a(n, m);
        {
            std::vector<double> row(mu.size());
            const double inv_sqrt_nrho = 1.0 / std::sqrt(static_cast<double>(n) * p.rho);
            for (Eigen::Index i = 0; i < n; ++i) {
                basis_row(data.x[static_cast<std::size_t>(i)], mu.size(), row.data());
                const double si = p.s(i) * inv_sqrt_nrho;
                for (Eigen::Index k = 0; k < m; ++k) {
                    a(i, k) = si * row[static_cast<std::size_t>(k)] *
                              std::sqrt(mu[static_cast<std::size_t>(k)]);
                }
            }
        }
        Eigen::MatrixXd b(m, m);
        b.setZero();
        b.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
        if (es.info() != Eigen::Success) throw numeric_error("fit: eigendecomposition failed");
        Eigen::VectorXd theta = es.eigenvalues();
        detail::clamp_spectrum(theta);
        // g(M') z = g(0) z + A' V diag((g(theta)-g(0))/theta) V^T A'^T z.
        Eigen::VectorXd q = es.eigenvectors().transpose() * (a.transpose() * p.z);
        for (Eigen::Index k = 0; k < m; ++k) {
            const double t = theta(k);
            q(k) *= t > 1e-300 ? (filter.apply(lambda_p, t) - g0) / t : 0.0;
        }
        c = (g0 * p.z + a * (es.eigenvectors() * q)) / p.rho;
    } else {
        Eigen::MatrixXd k = kernel.gram(data.x);
        Eigen::MatrixXd mp = (p.s * p.s.transpose()).cwiseProduct(k) /
                             (static_cast<double>(n) * p.rho);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mp);
        if (es.info() != Eigen::Success) throw numeric_error("fit: eigendecomposition failed");
        Eigen::VectorXd theta = es.eigenvalues();
        detail::clamp_spectrum(theta);
        Eigen::VectorXd q = es.eigenvectors().transpose() * p.z;
        for (Eigen::Index i = 0; i < n; ++i) q(i) *= filter.apply(lambda_p, theta(i));
        c = es.eigenvectors() * q / p.rho;
    }

    const double lambda_eff =
        filter.kind() == FilterKind::landweber ? lambda_p : lambda;
    return SpectralEstimator(data.x, std::vector<double>(p.s.data(), p.s.data() + n),
                             std::vector<double>(c.data(), c.data() + n), kernel, p.rho,
                             lambda_eff);
}

// Landweber by explicit gradient iteration on the unrescaled reduction:
//   a^{k+1} = a^k + (1/rho) (z - M a^k),  a^0 = 0,  c = a^t.
// Spectrally identical to fit() with the t-step Landweber filter; kept as an
// independent path and cross-checked in the tests.
inline SpectralEstimator fit_landweber_iterative(const Dataset& data, const KernelSpec& kernel,
                                                 long t, const WeightScheme& scheme) {
    if (t < 1) throw contract_error("fit_landweber_iterative: t must be >= 1");
    auto p = detail::prepare(data, kernel, scheme);
    const auto n = static_cast<Eigen::Index>(data.size());
    const double eta = 1.0 / p.rho;

    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    const auto step = [&](const auto& apply_m) {
        for (long it = 0; it < t; ++it) {
            a += eta * (p.z - apply_m(a));
            if (a.norm() > 1e12) {
                throw numeric_error("fit_landweber_iterative: iteration diverged");
            }
        }
    };

    if (kernel.is_basis()) {
        const auto& mu = kernel.eigenvalues();
        const auto m = static_cast<Eigen::Index>(mu.size());
        Eigen::MatrixXd f(n, m);  // M = F F^T, F = (1/sqrt n) diag(s) Phi diag(sqrt mu)
        std::vector<double> row(mu.size());
        const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            basis_row(data.x[static_cast<std::size_t>(i)], mu.size(), row.data());
            const double si = p.s(i) * inv_sqrt_n;
            for (Eigen::Index k = 0; k < m; ++k) {
                f(i, k) = si * row[static_cast<std::size_t>(k)] *
                          std::sqrt(mu[static_cast<std::size_t>(k)]);
            }
        }
        step([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return f * (f.transpose() * v); });
    } else {
        Eigen::MatrixXd k = kernel.gram(data.x);
        Eigen::MatrixXd m = (p.s * p.s.transpose()).cwiseProduct(k) / static_cast<double>(n);
        step([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return m * v; });
    }

    return SpectralEstimator(data.x, std::vector<double>(p.s.data(), p.s.data() + n),
                             std::vector<double>(a.data(), a.data() + n), kernel, p.rho,
                             1.0 / static_cast<double>(t));
}

}  // namespace specshift
