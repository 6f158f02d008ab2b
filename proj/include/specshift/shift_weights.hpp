#pragma once

// Train/test distribution pairs on [0,1] and the importance-weight machinery
// used by the weighted estimators.
//
// The test distribution is always Uniform[0,1].  A shift spec fixes the train
// density q and therefore the density ratio w = d(test)/d(train) = 1/q:
//
//   * none:     q = 1                        w = 1
//   * bounded:  q = 1 + a sin(2 pi x)        w in [1/(1+a), 1/(1-a)],  0 <= a < 1
//   * log:      q = (1/Z) / (1 - log x)      w = Z (1 - log x), unbounded at 0,
//               Z = integral_0^1 dt/(1 - log t)  (computed once, ~0.59635)
//
// All integrals against the test measure use the shared composite midpoint
// rule on (0,1] (1e5 panels), which never touches the x = 0 endpoint.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/quadrature.hpp"

namespace specshift {

enum class ShiftFamily { none, bounded, log_tail };

inline const char* to_string(ShiftFamily f) {
    switch (f) {
        case ShiftFamily::none: return "none";
        case ShiftFamily::bounded: return "bounded";
        case ShiftFamily::log_tail: return "log";
    }
    return "?";
}

class ShiftSpec {
  public:
    // Parameters of the weight moment condition
    //   ( integral w^{(p-1)/alpha} d rho_te )^alpha <= p!/2 C^{p-2} sigma^2,
    // with alpha = 0 read as the essential-supremum convention.
    struct MomentParams {
        double alpha = 1.0;
        double C = 1.0;
        double sigma = 1.0;
    };

    static ShiftSpec none() { return ShiftSpec(ShiftFamily::none, 0.0, {1.0, 1.0, 1.0}); }

    static ShiftSpec bounded(double a) {
        if (!std::isfinite(a) || a < 0.0 || a >= 1.0) {
            throw contract_error("bounded shift: amplitude a must lie in [0, 1)");
        }
        // sigma = 2 makes the default moment check pass for a <= 1/2:
        // sup w^{p-1} = 2^{p-1} <= 2 p! = p!/2 sigma^2.
        return ShiftSpec(ShiftFamily::bounded, a, {1.0, 1.0, 2.0});
    }

    static ShiftSpec log_tail() {
        ShiftSpec s(ShiftFamily::log_tail, 0.0, {1.0, 1.0, 1.0});
        // sigma^2 = 2 e max(1, Z) covers every p:
        // integral w^{p-1} = Z^{p-1} e Gamma(p,1) <= e (p-1)!.
        s.moment_.sigma = std::sqrt(2.0 * std::numbers::e * std::max(1.0, s.z_));
        return s;
    }

    ShiftSpec with_moment_params(double alpha, double C, double sigma) const {
        if (!std::isfinite(alpha) || alpha < 0.0 || alpha > 1.0) {
            throw contract_error("moment params: alpha must lie in [0, 1]");
        }
        if (!std::isfinite(C) || C <= 0.0 || !std::isfinite(sigma) || sigma <= 0.0) {
            throw contract_error("moment params: C and sigma must be finite and > 0");
        }
        ShiftSpec s = *this;
        s.moment_ = {alpha, C, sigma};
        return s;
    }

    ShiftFamily family() const { return family_; }
    double amplitude() const { return a_; }
    const MomentParams& moment_params() const { return moment_; }

    // Normalizer of the log-tail train density (only defined for that family).
    double z_constant() const {
        if (family_ != ShiftFamily::log_tail) throw contract_error("z_constant: not a log-tail shift");
        return z_;
    }

    // w(x) = d rho_te / d rho_tr at x in [0,1].  The log-tail ratio diverges
    // at the origin; x = 0 returns +infinity as a sentinel.
    double density_ratio(double x) const {
        check_point(x);
        switch (family_) {
            case ShiftFamily::none:
                return 1.0;
            case ShiftFamily::bounded:
                return 1.0 / (1.0 + a_ * std::sin(2.0 * std::numbers::pi * x));
            case ShiftFamily::log_tail:
                if (x == 0.0) return std::numeric_limits<double>::infinity();
                return z_ * (1.0 - std::log(x));
        }
        return 1.0;
    }

    // Train density q(x); q(0) = 0 for the log-tail family (continuous limit).
    double train_density(double x) const {
        check_point(x);
        switch (family_) {
            case ShiftFamily::none:
                return 1.0;
            case ShiftFamily::bounded:
                return 1.0 + a_ * std::sin(2.0 * std::numbers::pi * x);
            case ShiftFamily::log_tail:
                if (x == 0.0) return 0.0;
                return (1.0 / z_) / (1.0 - std::log(x));
        }
        return 1.0;
    }

    // Essential supremum of the ratio over (0,1]; +infinity for the log tail.
    double sup_weight() const {
        switch (family_) {
            case ShiftFamily::none: return 1.0;
            case ShiftFamily::bounded: return 1.0 / (1.0 - a_);
            case ShiftFamily::log_tail: return std::numeric_limits<double>::infinity();
        }
        return 1.0;
    }

    // Renyi divergence of order a between test and train distributions:
    //   H_a = (1/a) log integral w^a d rho_te,   a in (0, inf].
    // order = inf uses the analytic essential supremum per family.
    double renyi_divergence(double order) const {
        if (std::isnan(order) || order <= 0.0) {
            throw contract_error("renyi_divergence: order must be > 0 (or +inf)");
        }
        if (family_ == ShiftFamily::none) return 0.0;
        if (std::isinf(order)) return std::log(sup_weight());
        const double integral =
            integrate_unit([&](double x) { return std::pow(density_ratio(x), order); });
        return std::log(integral) / order;
    }

    // Supremum of the ratio over the quadrature grid on (0,1].  This is the
    // working convention for the alpha = 0 moment check: the log tail has an
    // infinite essential sup but every grid point is finite.
    double grid_sup_weight() const {
        if (family_ != ShiftFamily::log_tail) return sup_weight();
        const double h = 1.0 / static_cast<double>(default_quadrature_panels);
        return density_ratio(0.5 * h);  // the ratio is decreasing in x
    }

    bool operator==(const ShiftSpec& o) const {
        return family_ == o.family_ && a_ == o.a_ && moment_.alpha == o.moment_.alpha &&
               moment_.C == o.moment_.C && moment_.sigma == o.moment_.sigma;
    }

  private:
    ShiftSpec(ShiftFamily family, double a, MomentParams moment)
        : family_(family), a_(a), moment_(moment) {
        if (family_ == ShiftFamily::log_tail) {
            z_ = integrate_unit([](double t) { return 1.0 / (1.0 - std::log(t)); });
        }
    }

    static void check_point(double x) {
        if (std::isnan(x)) throw std::domain_error("shift: non-finite point");
        if (x < 0.0 || x > 1.0) throw std::domain_error("shift: point outside [0,1]");
    }

    ShiftFamily family_;
    double a_;
    MomentParams moment_;
    double z_ = 0.0;
};

// Rescales nonnegative weights to have sample mean exactly one, the
// self-normalized variant of importance weighting.  Entries land in [0, n].
inline std::vector<double> normalize_weights(const std::vector<double>& weights) {
    if (weights.empty()) throw contract_error("normalize_weights: empty input");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw contract_error("normalize_weights: weights must be finite and >= 0");
        }
        sum += w;
    }
    if (sum <= 0.0) throw contract_error("normalize_weights: degenerate input (all weights zero)");
    const double scale = static_cast<double>(weights.size()) / sum;
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] * scale;
    return out;
}

// Hard-clips weights at a threshold D > 1.  +infinity inputs are admissible
// and map to D: clipping is precisely what renders unbounded ratios usable.
inline std::vector<double> clip_weights(const std::vector<double>& weights, double threshold) {
    if (!(threshold > 1.0)) throw contract_error("clip_weights: threshold must exceed 1");
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (std::isnan(w) || w < 0.0) {
            throw contract_error("clip_weights: weights must be >= 0 (NaN rejected)");
        }
        out[i] = w < threshold ? w : threshold;
    }
    return out;
}

// Clipping schedule D_n = n^{alpha eps} for 1/2 <= r <= 3/2 and
// n^{alpha eps / (r - 1/2)} for r > 3/2, with 0 < eps < r/(2r + beta).
inline double clipping_threshold(std::size_t n, double r, double alpha, double epsilon,
                                 double beta) {
    if (n == 0) throw contract_error("clipping_threshold: n must be >= 1");
    if (!std::isfinite(r) || r < 0.5) throw contract_error("clipping_threshold: r must be >= 1/2");
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha > 1.0) {
        throw contract_error("clipping_threshold: alpha must lie in (0, 1]");
    }
    if (!std::isfinite(beta) || beta <= 0.0 || beta > 1.0) {
        throw contract_error("clipping_threshold: beta must lie in (0, 1]");
    }
    const double eps_cap = r / (2.0 * r + beta);
    if (!std::isfinite(epsilon) || epsilon <= 0.0 || epsilon >= eps_cap) {
        throw contract_error("clipping_threshold: epsilon must lie in (0, r/(2r+beta))");
    }
    const double exponent = r <= 1.5 ? alpha * epsilon : alpha * epsilon / (r - 0.5);
    const double d = std::pow(static_cast<double>(n), exponent);
    if (!(d > 1.0)) throw contract_error("clipping_threshold: n too small, threshold must exceed 1");
    return d;
}

// Verification of the weight moment condition for p = 2..p_max (p_max <= 20):
//   lhs_p = ( integral w^{(p-1)/alpha} d rho_te )^alpha   (alpha > 0)
//         = ( grid-sup of w )^{p-1}                        (alpha = 0)
//   rhs_p = p!/2 C^{p-2} sigma^2.
struct MomentCheckRow {
    int p = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

struct MomentCheckReport {
    double alpha = 0.0;
    double C = 0.0;
    double sigma = 0.0;
    std::vector<MomentCheckRow> rows;
    bool pass = false;
};

inline MomentCheckReport check_moment_condition(const ShiftSpec& shift, int p_max) {
    if (p_max < 2 || p_max > 20) {
        throw contract_error("check_moment_condition: p_max must lie in [2, 20]");
    }
    const auto& mp = shift.moment_params();
    MomentCheckReport report;
    report.alpha = mp.alpha;
    report.C = mp.C;
    report.sigma = mp.sigma;
    report.pass = true;

    const double grid_sup = mp.alpha == 0.0 ? shift.grid_sup_weight() : 0.0;
    double factorial = 1.0;  // p! accumulated incrementally; exact up to 20!
    for (int p = 2; p <= p_max; ++p) {
        factorial = (p == 2) ? 2.0 : factorial * p;
        MomentCheckRow row;
        row.p = p;
        if (mp.alpha == 0.0) {
            row.lhs = std::pow(grid_sup, p - 1);
        } else {
            const double expo = (p - 1) / mp.alpha;
            const double integral =
                integrate_unit([&](double x) { return std::pow(shift.density_ratio(x), expo); });
            row.lhs = std::pow(integral, mp.alpha);
        }
        row.rhs = 0.5 * factorial * std::pow(mp.C, p - 2) * mp.sigma * mp.sigma;
        row.ok = row.lhs <= row.rhs * (1.0 + 1e-9);
        report.pass = report.pass && row.ok;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace specshift
