#pragma once

// Randomized certificates for the deterministic operator facts the risk
// analysis leans on.  Each suite draws many random instances, evaluates both
// sides of an inequality with dense linear algebra, and reports the worst
// relative margin plus any counterexamples:
//
//   cordes              ||A^s B^s|| <= ||A B||^s                 (PSD A,B; 0<=s<=1)
//   power_difference    ||A^t - B^t|| <= t C^{t-1} ||A - B||     (t>=1; ||A||,||B||<=C)
//   normalization_gap   the weight-normalization perturbation of the
//                       empirical operator is bounded by kappa^2 |1 - mean w|
//   effdim_clipping     clipping importance weights can only shrink the
//                       effective dimension: N_clip(lambda) <= N(lambda),
//                       monotonically in the clipping threshold
//
// All margins use a relative slack of a few 1e-9..1e-6 to absorb eigensolver
// round-off; a genuine violation of any of these inequalities is a bug in
// the estimator's foundations, not noise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "specshift/errors.hpp"
#include "specshift/kernels.hpp"
#include "specshift/metrics.hpp"
#include "specshift/quadrature.hpp"
#include "specshift/rng.hpp"
#include "specshift/shift_weights.hpp"

namespace specshift {

inline constexpr int max_diagnostic_dim = 50;

inline void validate_psd_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw contract_error("diagnostics: matrices must be square with equal dimension");
    }
    if (a.rows() < 1 || a.rows() > max_diagnostic_dim) {
        throw contract_error("diagnostics: dimension must lie in [1, 50]");
    }
    for (const auto* m : {&a, &b}) {
        if (!m->allFinite()) throw contract_error("diagnostics: non-finite matrix entry");
        if ((*m - m->transpose()).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, m->cwiseAbs().maxCoeff())) {
            throw contract_error("diagnostics: matrix is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m, Eigen::EigenvaluesOnly);
        const double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (es.eigenvalues().minCoeff() < -tol) {
            throw contract_error("diagnostics: matrix is not positive semidefinite");
        }
    }
}

// Spectral norm via full SVD; sizes here are tiny.
inline double operator_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) throw contract_error("operator_norm: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

// A^p for symmetric PSD A through its eigendecomposition; tiny negative
// eigenvalues from round-off clamp to zero.
inline Eigen::MatrixXd psd_power(const Eigen::MatrixXd& a, double p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw numeric_error("psd_power: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            if (ev(i) < -tol) throw numeric_error("psd_power: matrix is not PSD");
            ev(i) = 0.0;
        }
        ev(i) = p == 0.0 ? 1.0 : std::pow(ev(i), p);
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd random_psd(rng_stream& rs, int d, double norm_cap = 0.0) {
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rs.normal();
    }
    Eigen::MatrixXd a = g * g.transpose() / static_cast<double>(d);
    if (norm_cap > 0.0) {
        const double nrm = operator_norm(a);
        if (nrm > 0.0) a *= (norm_cap * rs.uniform()) / nrm;
    }
    return a;
}

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  // min of rhs-lhs (relative)
    std::vector<std::string> counterexamples;                       // first few failures

    bool pass() const { return failures == 0 && cases > 0; }
};

namespace detail {

inline void record_case(SuiteResult& suite, double lhs, double rhs, double rel_slack,
                        const std::string& describe) {
    ++suite.cases;
    const double scale = std::max({std::abs(rhs), std::abs(lhs), 1e-300});
    const double margin = (rhs - lhs) / scale;
    suite.worst_margin = std::min(suite.worst_margin, margin);
    if (lhs > rhs + rel_slack * scale) {
        ++suite.failures;
        if (suite.counterexamples.size() < 5) {
            std::ostringstream os;
            os << describe << "  lhs=" << lhs << " rhs=" << rhs << " margin=" << margin;
            suite.counterexamples.push_back(os.str());
        }
    }
}

}  // namespace detail

inline SuiteResult check_cordes(std::uint64_t seed, std::size_t cases) {
    SuiteResult suite;
    suite.name = "cordes";
    rng_stream rs(seed, 0x11);
    for (std::size_t c = 0; c < cases; ++c) {
        const int d = 2 + static_cast<int>(rs.bits() % 11);
        Eigen::MatrixXd a = random_psd(rs, d);
        Eigen::MatrixXd b = random_psd(rs, d);
        const double s = (c % 10 == 0) ? (c % 20 == 0 ? 1.0 : 0.5) : rs.uniform();
        validate_psd_pair(a, b);
        const double lhs = operator_norm(psd_power(a, s) * psd_power(b, s));
        const double rhs = std::pow(operator_norm(a * b), s);
        std::ostringstream os;
        os << "cordes d=" << d << " s=" << s;
        detail::record_case(suite, lhs, rhs, 1e-8, os.str());
    }
    return suite;
}

inline SuiteResult check_power_difference(std::uint64_t seed, std::size_t cases) {
    SuiteResult suite;
    suite.name = "power_difference";
    rng_stream rs(seed, 0x22);
    for (std::size_t c = 0; c < cases; ++c) {
        const int d = 2 + static_cast<int>(rs.bits() % 11);
        Eigen::MatrixXd a = random_psd(rs, d);
        Eigen::MatrixXd b;
        if (c % 3 == 0) {
            b = a + 0.05 * rs.uniform() * random_psd(rs, d);  // nearby pair
        } else {
            b = random_psd(rs, d);
        }
        validate_psd_pair(a, b);
        const double t = (c % 7 == 0) ? 1.0 : 1.0 + 3.0 * rs.uniform();
        const double cap = std::max(operator_norm(a), operator_norm(b));
        const double lhs = operator_norm(psd_power(a, t) - psd_power(b, t));
        const double rhs = t * std::pow(cap, t - 1.0) * operator_norm(a - b);
        std::ostringstream os;
        os << "power_difference d=" << d << " t=" << t << " C=" << cap;
        detail::record_case(suite, lhs, rhs, 1e-8, os.str());
    }
    return suite;
}

// Gap between the normalized-weight and raw-weight empirical operators,
// realized on a sample Gram matrix: the nonzero spectrum of the RKHS-side
// perturbation equals that of (1/n) K^{1/2} diag(wbar - w) K^{1/2}.
inline SuiteResult check_normalization_gap(std::uint64_t seed, std::size_t cases) {
    SuiteResult suite;
    suite.name = "normalization_gap";
    rng_stream rs(seed, 0x33);
    for (std::size_t c = 0; c < cases; ++c) {
        const int n = 5 + static_cast<int>(rs.bits() % 56);
        KernelSpec kernel = [&] {
            if (c % 2 == 0) return KernelSpec::gaussian_rbf(0.05 + 0.95 * rs.uniform());
            const int m = 1 + static_cast<int>(rs.bits() % 8);
            std::vector<double> mu(m);
            double cur = 0.25 + 0.75 * rs.uniform();
            for (int k = 0; k < m; ++k) {
                mu[k] = cur;
                cur *= 0.3 + 0.65 * rs.uniform();
            }
            return KernelSpec::truncated_basis(mu);
        }();
        std::vector<double> x(n), w(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rs.uniform_open0();
            w[i] = std::exp(1.2 * rs.normal());  // heavy-tailed positive weights
        }
        auto wbar = normalize_weights(w);

        Eigen::MatrixXd k = kernel.gram(x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        if (es.info() != Eigen::Success) {
            throw numeric_error("normalization_gap: eigendecomposition failed");
        }
        Eigen::VectorXd ev = es.eigenvalues();
        const double tol = 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
            if (ev(i) < 0.0) {
                if (ev(i) < -tol) throw numeric_error("normalization_gap: Gram not PSD");
                ev(i) = 0.0;
            }
            ev(i) = std::sqrt(ev(i));
        }
        Eigen::MatrixXd khalf = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();

        Eigen::VectorXd delta(n);
        double mean = 0.0;
        for (int i = 0; i < n; ++i) {
            delta(i) = wbar[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)];
            mean += w[static_cast<std::size_t>(i)];
        }
        mean /= n;
        Eigen::MatrixXd pert =
            khalf * delta.asDiagonal() * khalf / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(pert, Eigen::EigenvaluesOnly);
        const double lhs = ep.eigenvalues().cwiseAbs().maxCoeff();
        const double kappa = kernel.kappa();
        const double rhs = kappa * kappa * std::abs(1.0 - mean);
        std::ostringstream os;
        os << "normalization_gap n=" << n << " kernel=" << (kernel.is_basis() ? "basis" : "rbf");
        detail::record_case(suite, lhs, rhs, 1e-8, os.str());
    }
    return suite;
}

namespace detail {

// Test-side effective dimension after clipping: the operator whose (j,k)
// entry is sqrt(mu_j mu_k) * Int phi_j phi_k (w_clip / w) d(test), computed
// by midpoint quadrature (exact here up to round-off: the integrands are
// low-frequency trig polynomials times a smooth bounded ratio).
inline double clipped_effective_dimension(const std::vector<double>& mu, const ShiftSpec& shift,
                                          double threshold, double lambda, std::size_t panels) {
    const auto m = static_cast<Eigen::Index>(mu.size());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> row(mu.size());
    const double h = 1.0 / static_cast<double>(panels);
    for (std::size_t i = 0; i < panels; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * h;
        const double w = shift.density_ratio(x);
        const double ratio = w > threshold ? threshold / w : 1.0;
        basis_row(x, mu.size(), row.data());
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index k = 0; k <= j; ++k) {
                g(j, k) += ratio * row[static_cast<std::size_t>(j)] *
                           row[static_cast<std::size_t>(k)];
            }
        }
    }
    Eigen::MatrixXd ahat(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k <= j; ++k) {
            const double v = h * g(j, k) *
                             std::sqrt(mu[static_cast<std::size_t>(j)] *
                                       mu[static_cast<std::size_t>(k)]);
            ahat(j, k) = v;
            ahat(k, j) = v;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ahat, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw numeric_error("effdim_clipping: eigendecomposition failed");
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        const double theta = std::max(0.0, es.eigenvalues()(k));
        acc += theta / (lambda + theta);
    }
    return acc;
}

}  // namespace detail

inline SuiteResult check_effdim_clipping(std::uint64_t seed, std::size_t cases) {
    SuiteResult suite;
    suite.name = "effdim_clipping";
    rng_stream rs(seed, 0x44);
    constexpr std::size_t panels = 100000;
    for (std::size_t c = 0; c < cases; ++c) {
        const int m = 2 + static_cast<int>(rs.bits() % 9);
        std::vector<double> mu(static_cast<std::size_t>(m));
        double cur = 0.3 + 0.7 * rs.uniform();
        for (int k = 0; k < m; ++k) {
            mu[static_cast<std::size_t>(k)] = cur;
            cur *= 0.3 + 0.65 * rs.uniform();
        }
        const ShiftSpec shift = (c % 2 == 0) ? ShiftSpec::log_tail()
                                             : ShiftSpec::bounded(0.1 + 0.8 * rs.uniform());
        const double lambda = std::pow(10.0, -4.0 * rs.uniform());
        const double d1 = 1.01 + 2.0 * rs.uniform();
        const double d2 = d1 + 0.5 + 4.0 * rs.uniform();

        const double n_small = detail::clipped_effective_dimension(mu, shift, d1, lambda, panels);
        const double n_large = detail::clipped_effective_dimension(mu, shift, d2, lambda, panels);
        const double n_full = effective_dimension(mu, lambda);

        std::ostringstream os;
        os << "effdim_clipping m=" << m << " family=" << to_string(shift.family())
           << " lambda=" << lambda << " D1=" << d1 << " D2=" << d2;
        detail::record_case(suite, n_small, n_large, 1e-6, os.str() + " [monotone]");
        detail::record_case(suite, n_large, n_full, 1e-6, os.str() + " [vs unclipped]");
        --suite.cases;  // the two comparisons above form one case
    }
    return suite;
}

struct DiagnosticsReport {
    std::vector<SuiteResult> suites;

    bool pass() const {
        for (const auto& s : suites) {
            if (!s.pass()) return false;
        }
        return !suites.empty();
    }
};

inline DiagnosticsReport run_diagnostics(std::uint64_t seed, std::size_t cases_per_suite) {
    if (cases_per_suite == 0) throw contract_error("run_diagnostics: need at least one case");
    DiagnosticsReport report;
    report.suites.push_back(check_cordes(seed, cases_per_suite));
    report.suites.push_back(check_power_difference(seed, cases_per_suite));
    report.suites.push_back(check_normalization_gap(seed, cases_per_suite));
    report.suites.push_back(check_effdim_clipping(seed, cases_per_suite));
    return report;
}

}  // namespace specshift
