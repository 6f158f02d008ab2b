#pragma once

// Spectral regularization filters g_lambda acting on operator spectra that
// have been rescaled into [0,1] (domain cap U = 1):
//
//   * Tikhonov:        g_lambda(u) = 1 / (lambda + u)
//   * Landweber:       g_lambda(u) = sum_{i<t} (1-u)^i,  lambda bound to 1/t
//   * Spectral cutoff: g_lambda(u) = 1/u if u >= lambda, else 0
//
// Every filter satisfies, on [0,U]:
//   (i)   sup |g_lambda(u)|        <= b / lambda
//   (ii)  sup |g_lambda(u) u|      <= b
//   (iii) sup |1 - g_lambda(u) u| u^nu <= gamma_nu lambda^nu   for nu <= qualification
//
// b = 1 for all three.  Tikhonov has qualification 1; the other two are
// unsaturated (infinite qualification).  Landweber's gamma_nu has no closed
// form here and is obtained by numerical maximization.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "specshift/errors.hpp"

namespace specshift {

enum class FilterKind { tikhonov, landweber, cutoff };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::tikhonov: return "tikhonov";
        case FilterKind::landweber: return "landweber";
        case FilterKind::cutoff: return "cutoff";
    }
    return "?";
}

namespace detail {

// max_u (1-u)^t u^nu on [0,1], by golden-section refinement of a dense
// bracket around the interior critical point nu/(t+nu).  Accurate to ~1e-12
// relative, which keeps grid checks honest: no grid sample can exceed the
// returned supremum by more than floating-point noise.
inline double landweber_residual_peak(long t, double nu) {
    const auto h = [&](double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return std::pow(1.0 - u, static_cast<double>(t)) * std::pow(u, nu);
    };
    const double ustar = nu / (static_cast<double>(t) + nu);
    double lo = std::max(0.0, 0.5 * ustar);
    double hi = std::min(1.0, 2.0 * ustar);
    // Golden-section search; the objective is unimodal on (0,1).
    constexpr double gr = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = h(x1), f2 = h(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-15; ++it) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a); f2 = h(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a); f1 = h(x1);
        }
    }
    return std::max({f1, f2, h(ustar)});
}

// gamma_nu for a t-step Landweber filter: sup_u |1 - g u| u^nu / lambda^nu
// with lambda = 1/t, i.e. t^nu * max_u (1-u)^t u^nu.
inline double landweber_gamma(long t, double nu) {
    return std::pow(static_cast<double>(t), nu) * landweber_residual_peak(t, nu);
}

}  // namespace detail

class FilterSpec {
  public:
    static constexpr double domain_cap = 1.0;  // U: spectra are rescaled into [0,U]

    static FilterSpec tikhonov() { return FilterSpec(FilterKind::tikhonov, 0); }

    static FilterSpec landweber(long t) {
        if (t < 1) throw contract_error("landweber: step count t must be >= 1");
        return FilterSpec(FilterKind::landweber, t);
    }

    static FilterSpec spectral_cutoff() { return FilterSpec(FilterKind::cutoff, 0); }

    FilterKind kind() const { return kind_; }

    long steps() const {
        if (kind_ != FilterKind::landweber) throw contract_error("steps: not a Landweber filter");
        return t_;
    }

    double b() const { return 1.0; }

    double qualification() const {
        return kind_ == FilterKind::tikhonov ? 1.0 : std::numeric_limits<double>::infinity();
    }

    // Residual constant gamma_nu; requesting nu beyond the qualification is a
    // contract violation (the saturated filter admits no such constant).
    double gamma(double nu) const {
        if (!(nu > 0.0)) throw contract_error("gamma: nu must be > 0");
        if (nu > qualification() * (1.0 + 1e-12)) {
            throw contract_error("gamma: nu exceeds the filter qualification");
        }
        switch (kind_) {
            case FilterKind::tikhonov: return 1.0;
            case FilterKind::cutoff: return 1.0;
            case FilterKind::landweber: return detail::landweber_gamma(t_, nu);
        }
        return 1.0;
    }

    // g_lambda(u) on the rescaled domain.  lambda in (0, U]; u in [0, U] with
    // a 1e-9 relative slack for round-off from the operator rescaling.
    // For Landweber, lambda is bound to 1/t: a mismatch beyond 1e-12 is an
    // inconsistency in the caller's bookkeeping, not a request to reround.
    double apply(double lambda, double u) const {
        check_args(lambda, u);
        switch (kind_) {
            case FilterKind::tikhonov:
                return 1.0 / (lambda + u);
            case FilterKind::cutoff:
                return u >= lambda ? 1.0 / u : 0.0;
            case FilterKind::landweber: {
                // Closed form (1 - (1-u)^t) / u; the u -> 0 limit is t.
                // Below u = 1/2 the direct subtraction loses ~eps/(t u)
                // relative accuracy, so use the equivalent expm1 form there.
                if (u == 0.0) return static_cast<double>(t_);
                if (u < 0.5) {
                    return -std::expm1(static_cast<double>(t_) * std::log1p(-u)) / u;
                }
                return (1.0 - std::pow(1.0 - u, static_cast<double>(t_))) / u;
            }
        }
        return 0.0;
    }

    // 1 - u g_lambda(u), evaluated in a cancellation-free form per filter.
    double residual(double lambda, double u) const {
        check_args(lambda, u);
        switch (kind_) {
            case FilterKind::tikhonov:
                return lambda / (lambda + u);
            case FilterKind::cutoff:
                return u >= lambda ? 0.0 : 1.0;
            case FilterKind::landweber:
                return std::pow(1.0 - u, static_cast<double>(t_));
        }
        return 0.0;
    }

    bool operator==(const FilterSpec& o) const { return kind_ == o.kind_ && t_ == o.t_; }

  private:
    FilterSpec(FilterKind kind, long t) : kind_(kind), t_(t) {}

    void check_args(double lambda, double u) const {
        if (!std::isfinite(lambda) || !std::isfinite(u)) {
            throw std::domain_error("filter: non-finite argument");
        }
        if (lambda <= 0.0 || lambda > domain_cap * (1.0 + 1e-12)) {
            throw contract_error("filter: lambda must lie in (0, U]");
        }
        if (u < 0.0 || u > domain_cap * (1.0 + 1e-9)) {
            throw contract_error("filter: u must lie in [0, U]");
        }
        if (kind_ == FilterKind::landweber &&
            std::abs(lambda - 1.0 / static_cast<double>(t_)) > 1e-12) {
            throw contract_error("landweber: lambda is bound to 1/t (got inconsistent lambda)");
        }
    }

    FilterKind kind_;
    long t_;  // Landweber step count
};

// Constants (b, qualification, gamma table) for a filter.  Tikhonov and
// cutoff have gamma_nu = 1; Landweber's values are computed numerically.
struct FilterConstants {
    double b = 1.0;
    double qualification = 1.0;
    std::map<double, double> gamma_table;  // nu -> gamma_nu, nu <= qualification only
    std::vector<double> skipped_nu;        // requested nu beyond the qualification
};

inline FilterConstants filter_constants(const FilterSpec& filter, const std::vector<double>& nu_list) {
    FilterConstants out;
    out.b = filter.b();
    out.qualification = filter.qualification();
    for (double nu : nu_list) {
        if (!(nu > 0.0)) throw contract_error("filter_constants: nu values must be > 0");
        if (nu > out.qualification * (1.0 + 1e-12)) {
            out.skipped_nu.push_back(nu);
        } else {
            out.gamma_table[nu] = filter.gamma(nu);
        }
    }
    return out;
}

// Grid verification report for the three filter conditions.
struct ResidualCheck {
    double nu = 0.0;
    double gamma = 0.0;        // constant the condition was checked against
    double worst_ratio = 0.0;  // max over grid of |1-gu| u^nu / (gamma lambda^nu)
    bool ok = false;
};

struct FilterCheckReport {
    FilterKind kind = FilterKind::tikhonov;
    double b = 1.0;
    double qualification = 1.0;
    double worst_sup_ratio = 0.0;  // max of |g| lambda / b        (condition i)
    double worst_product = 0.0;    // max of |g u| / b              (condition ii)
    bool bounds_ok = false;
    std::vector<ResidualCheck> residuals;  // condition iii per admissible nu
    std::vector<double> skipped_nu;
    bool pass = false;
};

// Checks the three filter conditions on the product of the supplied grids,
// with multiplicative slack 1 + 1e-9.  For Landweber, each grid lambda is
// rounded to its step count t = round(1/lambda) and verified at the effective
// lambda = 1/t, since the filter only exists at those parameter values; the
// reported gamma_nu is the max of the per-t constants over the grid.
inline FilterCheckReport verify_filter_conditions(const FilterSpec& filter,
                                                  const std::vector<double>& lambda_grid,
                                                  const std::vector<double>& u_grid,
                                                  const std::vector<double>& nu_list) {
    if (lambda_grid.empty() || u_grid.empty()) {
        throw contract_error("verify_filter_conditions: empty grid");
    }
    constexpr double slack = 1.0 + 1e-9;
    const bool lw = filter.kind() == FilterKind::landweber;

    // Effective (lambda, filter) pairs; Landweber re-binds t per grid lambda.
    std::vector<std::pair<double, FilterSpec>> cells;
    cells.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        if (!(lambda > 0.0) || lambda > FilterSpec::domain_cap) {
            throw contract_error("verify_filter_conditions: lambda grid must lie in (0, U]");
        }
        if (lw) {
            const long t = std::max<long>(1, std::lround(1.0 / lambda));
            cells.emplace_back(1.0 / static_cast<double>(t), FilterSpec::landweber(t));
        } else {
            cells.emplace_back(lambda, filter);
        }
    }

    FilterCheckReport report;
    report.kind = filter.kind();
    report.b = filter.b();
    report.qualification = filter.qualification();

    for (double nu : nu_list) {
        if (nu > report.qualification * (1.0 + 1e-12)) report.skipped_nu.push_back(nu);
    }

    // gamma per admissible nu: analytic 1 for Tikhonov/cutoff, per-grid max of
    // the numerically maximized per-t constants for Landweber.
    std::vector<std::pair<double, double>> gammas;  // (nu, gamma)
    for (double nu : nu_list) {
        if (nu > report.qualification * (1.0 + 1e-12)) continue;
        double g = 0.0;
        if (lw) {
            for (const auto& cell : cells) g = std::max(g, cell.second.gamma(nu));
        } else {
            g = filter.gamma(nu);
        }
        gammas.emplace_back(nu, g);
    }

    std::vector<double> worst(gammas.size(), 0.0);
    double worst_sup = 0.0, worst_prod = 0.0;
    for (const auto& [lambda, f] : cells) {
        for (double u : u_grid) {
            const double g = f.apply(lambda, u);
            const double res = f.residual(lambda, u);
            worst_sup = std::max(worst_sup, std::abs(g) * lambda / f.b());
            worst_prod = std::max(worst_prod, std::abs(g * u) / f.b());
            for (std::size_t i = 0; i < gammas.size(); ++i) {
                const auto& [nu, gamma] = gammas[i];
                const double ratio = std::abs(res) * std::pow(u, nu) / (gamma * std::pow(lambda, nu));
                worst[i] = std::max(worst[i], ratio);
            }
        }
    }

    report.worst_sup_ratio = worst_sup;
    report.worst_product = worst_prod;
    report.bounds_ok = worst_sup <= slack && worst_prod <= slack;
    report.pass = report.bounds_ok;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        ResidualCheck rc;
        rc.nu = gammas[i].first;
        rc.gamma = gammas[i].second;
        rc.worst_ratio = worst[i];
        rc.ok = worst[i] <= slack;
        report.pass = report.pass && rc.ok;
        report.residuals.push_back(rc);
    }
    return report;
}

}  // namespace specshift
