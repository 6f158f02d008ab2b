#pragma once

// Mercer kernels on [0,1]:
//   * Gaussian RBF with fixed bandwidth (closed form, kappa = 1).
//   * Finite-rank kernels K(x,x') = sum_k mu_k phi_k(x) phi_k(x') built on a
//     fixed trigonometric basis with a user-supplied non-increasing positive
//     eigenvalue sequence.
//
// Specs are immutable after construction and safe to share across threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "specshift/errors.hpp"

namespace specshift {

// Orthonormal trigonometric system on [0,1] under the uniform measure:
//   phi_1 = 1, phi_{2j} = sqrt(2) cos(2 pi j x), phi_{2j+1} = sqrt(2) sin(2 pi j x).
// One sin/cos pair is evaluated per call; higher frequencies come from the
// angle-addition recurrence, which keeps a basis row at O(m) flops.
inline void basis_row(double x, std::size_t m, double* out) {
    if (m == 0) return;
    out[0] = 1.0;
    if (m == 1) return;
    const double angle = 2.0 * std::numbers::pi * x;
    const double c1 = std::cos(angle);
    const double s1 = std::sin(angle);
    constexpr double rt2 = std::numbers::sqrt2;
    double cj = c1;  // cos(2 pi j x), j starting at 1
    double sj = s1;
    std::size_t k = 1;  // zero-based slot of the next mode
    while (k < m) {
        out[k++] = rt2 * cj;
        if (k < m) out[k++] = rt2 * sj;
        const double cn = cj * c1 - sj * s1;
        const double sn = sj * c1 + cj * s1;
        cj = cn;
        sj = sn;
    }
}

// n x m matrix of basis values, Phi(i,k) = phi_{k+1}(points[i]).
inline Eigen::MatrixXd basis_matrix(const std::vector<double>& points, std::size_t m) {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(m));
    std::vector<double> row(m);
    for (std::size_t i = 0; i < points.size(); ++i) {
        basis_row(points[i], m, row.data());
        for (std::size_t k = 0; k < m; ++k) phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    return phi;
}

struct GaussianRbf {
    double bandwidth;
};

struct TruncatedBasis {
    std::vector<double> eigenvalues;  // mu_1 >= mu_2 >= ... > 0
};

class KernelSpec {
  public:
    static KernelSpec gaussian_rbf(double bandwidth) {
        if (!std::isfinite(bandwidth) || bandwidth <= 0.0) {
            throw contract_error("gaussian_rbf: bandwidth must be finite and > 0");
        }
        return KernelSpec(GaussianRbf{bandwidth});
    }

    static KernelSpec truncated_basis(std::vector<double> eigenvalues) {
        if (eigenvalues.empty()) throw contract_error("truncated_basis: eigenvalue sequence is empty");
        for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
            if (!std::isfinite(eigenvalues[k]) || eigenvalues[k] <= 0.0) {
                throw contract_error("truncated_basis: eigenvalues must be finite and > 0");
            }
            if (k > 0 && eigenvalues[k] > eigenvalues[k - 1]) {
                throw contract_error("truncated_basis: eigenvalues must be non-increasing");
            }
        }
        return KernelSpec(TruncatedBasis{std::move(eigenvalues)});
    }

    bool is_rbf() const { return std::holds_alternative<GaussianRbf>(spec_); }
    bool is_basis() const { return std::holds_alternative<TruncatedBasis>(spec_); }

    double bandwidth() const {
        if (!is_rbf()) throw contract_error("bandwidth: not an RBF kernel");
        return std::get<GaussianRbf>(spec_).bandwidth;
    }

    const std::vector<double>& eigenvalues() const {
        if (!is_basis()) throw contract_error("eigenvalues: not a truncated-basis kernel");
        return std::get<TruncatedBasis>(spec_).eigenvalues;
    }

    std::size_t rank() const { return is_basis() ? eigenvalues().size() : 0; }

    // Pointwise kernel value.  Inputs must be finite; the trigonometric basis
    // is periodic so values slightly outside [0,1] are still well defined.
    double operator()(double x, double xp) const {
        if (!std::isfinite(x) || !std::isfinite(xp)) {
            throw std::domain_error("kernel evaluation: non-finite input");
        }
        if (is_rbf()) {
            const double bw = std::get<GaussianRbf>(spec_).bandwidth;
            const double d = x - xp;
            return std::exp(-d * d / (2.0 * bw * bw));
        }
        const auto& mu = eigenvalues();
        const std::size_t m = mu.size();
        std::vector<double> rx(m), rxp(m);
        basis_row(x, m, rx.data());
        basis_row(xp, m, rxp.data());
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += mu[k] * rx[k] * rxp[k];
        return acc;
    }

    // Gram matrix K(points_i, points_j).  Points must be non-empty and finite.
    Eigen::MatrixXd gram(const std::vector<double>& points) const {
        if (points.empty()) throw std::domain_error("gram: empty point set");
        for (double x : points) {
            if (!std::isfinite(x)) throw std::domain_error("gram: non-finite point");
        }
        const auto n = static_cast<Eigen::Index>(points.size());
        if (is_basis()) {
            const auto& mu = eigenvalues();
            Eigen::MatrixXd phi = basis_matrix(points, mu.size());
            Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
            return phi * d.asDiagonal() * phi.transpose();
        }
        const double bw = std::get<GaussianRbf>(spec_).bandwidth;
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double d = points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)];
                const double v = std::exp(-d * d / (2.0 * bw * bw));
                k(i, j) = v;
                k(j, i) = v;
            }
        }
        return k;
    }

    // kappa = sup_x sqrt(K(x,x)).  Exact 1 for the RBF; for truncated-basis
    // kernels the supremum of the diagonal is located by dense grid search
    // over [0,1] (1e4 points).  Computed lazily and cached: copies of this
    // spec share the cache, and effective-dimension-only workloads never pay
    // for the scan.
    double kappa() const {
        if (is_rbf()) return 1.0;
        ensure_kappa();
        return kappa_cache_->value;
    }

    // Analytic upper bound sqrt(mu_1 + 2 sum_{k>=2} mu_k) kept as a
    // cross-check on the grid search (|phi_1| = 1, |phi_k| <= sqrt(2)).
    double kappa_bound() const {
        if (is_rbf()) return 1.0;
        const auto& mu = eigenvalues();
        double acc = mu[0];
        for (std::size_t k = 1; k < mu.size(); ++k) acc += 2.0 * mu[k];
        return std::sqrt(acc);
    }

    bool operator==(const KernelSpec& other) const {
        if (is_rbf() != other.is_rbf()) return false;
        if (is_rbf()) return bandwidth() == other.bandwidth();
        return eigenvalues() == other.eigenvalues();
    }
    bool operator!=(const KernelSpec& other) const { return !(*this == other); }

  private:
    struct KappaCache {
        std::once_flag flag;
        double value = 0.0;
    };

    explicit KernelSpec(std::variant<GaussianRbf, TruncatedBasis> spec)
        : spec_(std::move(spec)), kappa_cache_(std::make_shared<KappaCache>()) {}

    void ensure_kappa() const {
        std::call_once(kappa_cache_->flag, [this] {
            const auto& mu = eigenvalues();
            const std::size_t m = mu.size();
            constexpr std::size_t grid_points = 10000;
            std::vector<double> row(m);
            double best = 0.0;
            for (std::size_t i = 0; i < grid_points; ++i) {
                const double x = static_cast<double>(i) / static_cast<double>(grid_points - 1);
                basis_row(x, m, row.data());
                double diag = 0.0;
                for (std::size_t k = 0; k < m; ++k) diag += mu[k] * row[k] * row[k];
                best = std::max(best, diag);
            }
            kappa_cache_->value = std::sqrt(best);
        });
    }

    std::variant<GaussianRbf, TruncatedBasis> spec_;
    std::shared_ptr<KappaCache> kappa_cache_;
};

}  // namespace specshift
