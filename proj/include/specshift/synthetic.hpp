#pragma once

// Synthetic regression problems with a known spectral profile.
//
// The kernel is the finite-rank trigonometric one with eigenvalues
// mu_k = k^{-1/beta} (so the effective dimension scales like lambda^{-beta}),
// and the target lies at source-smoothness r:
//
//   f*(x) = sum_k mu_k^r a_k phi_k(x),   a_k = (-1)^{k+1} k^{-0.51},
//
// i.e. f* = L^r h with h = sum a_k phi_k just inside L^2 (sum a_k^2 < inf).
// Training points are drawn from the shifted source density, responses are
// f*(x) plus bounded uniform noise, and the attached raw weights are the
// exact test/train density ratio at each point.
//
// Sampling is deterministic given (seed, trial, n): each draw uses its own
// counter-keyed stream, so cells of a sweep can run in any order or in
// parallel and reproduce byte-identical data.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "specshift/errors.hpp"
#include "specshift/estimator.hpp"
#include "specshift/kernels.hpp"
#include "specshift/rng.hpp"
#include "specshift/shift_weights.hpp"

namespace specshift {

struct SyntheticProblem {
    double beta = 0.5;         // eigenvalue decay: mu_k = k^{-1/beta}
    double r = 1.0;            // source smoothness of the target
    std::size_t m = 512;       // kernel rank
    double noise_level = 0.5;  // responses get Uniform[-noise, +noise] noise
    KernelSpec kernel = KernelSpec::truncated_basis({1.0});
    std::vector<double> target_coeffs;  // d*_k = mu_k^r a_k
};

inline double target_seed_coeff(std::size_t k1based) {
    const double k = static_cast<double>(k1based);
    const double mag = std::pow(k, -0.51);
    return (k1based % 2 == 1) ? mag : -mag;
}

inline SyntheticProblem make_problem(double beta, double r, std::size_t m = 512,
                                     double noise_level = 0.5) {
    if (!(beta > 0.0) || beta > 1.0 || !std::isfinite(beta)) {
        throw contract_error("make_problem: beta must lie in (0, 1]");
    }
    if (!(r >= 0.5) || !std::isfinite(r)) {
        throw contract_error("make_problem: r must be finite and >= 1/2");
    }
    if (m == 0) throw contract_error("make_problem: kernel rank must be >= 1");
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
        throw contract_error("make_problem: noise level must be finite and >= 0");
    }
    SyntheticProblem p;
    p.beta = beta;
    p.r = r;
    p.m = m;
    p.noise_level = noise_level;
    std::vector<double> mu(m);
    p.target_coeffs.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double kk = static_cast<double>(k + 1);
        mu[k] = std::pow(kk, -1.0 / beta);
        p.target_coeffs[k] = std::pow(mu[k], r) * target_seed_coeff(k + 1);
    }
    p.kernel = KernelSpec::truncated_basis(std::move(mu));
    return p;
}

inline double f_rho_eval(const SyntheticProblem& p, double x) {
    std::vector<double> row(p.m);
    basis_row(x, p.m, row.data());
    double acc = 0.0;
    for (std::size_t k = 0; k < p.m; ++k) acc += p.target_coeffs[k] * row[k];
    return acc;
}

// Draw one training point from the source density of `shift` by rejection
// against the uniform proposal.  The envelope constant is sup q(x): 1+a for
// the bounded family; 1/Z for the heavy-tailed one, whose density
// Z^{-1}/(1 - ln x) increases to its maximum 1/Z at x = 1.
inline double sample_train_point(const ShiftSpec& shift, rng_stream& rs) {
    if (shift.family() == ShiftFamily::none) return rs.uniform_open0();
    for (int attempt = 0; attempt < 1000000; ++attempt) {
        const double x = rs.uniform_open0();
        const double u = rs.uniform();
        switch (shift.family()) {
            case ShiftFamily::bounded: {
                const double a = shift.amplitude();
                if (u * (1.0 + a) <= shift.train_density(x)) return x;
                break;
            }
            case ShiftFamily::log_tail: {
                // q(x)/sup q = 1/(1 - ln x) in (0, 1].
                if (u <= 1.0 / (1.0 - std::log(x))) return x;
                break;
            }
            case ShiftFamily::none:
                return x;
        }
    }
    throw numeric_error("sample_train_point: rejection sampler failed to accept");
}

// n training points with responses and exact density-ratio weights.  One
// stream per cell, keyed by (trial, n) on top of the base seed: no two cells
// of a sweep ever share a stream, so execution order cannot affect the data.
inline Dataset sample_train(const SyntheticProblem& p, const ShiftSpec& shift, std::size_t n,
                            std::uint64_t seed, std::uint64_t trial) {
    if (n == 0) throw contract_error("sample_train: n must be >= 1");
    Dataset d;
    d.x.reserve(n);
    d.y.reserve(n);
    d.raw_weights.reserve(n);
    rng_stream rs(seed, trial, static_cast<std::uint64_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sample_train_point(shift, rs);
        const double noise = p.noise_level > 0.0
                                 ? rs.uniform(-p.noise_level, p.noise_level)
                                 : 0.0;
        d.x.push_back(x);
        d.y.push_back(f_rho_eval(p, x) + noise);
        d.raw_weights.push_back(shift.density_ratio(x));
    }
    return d;
}

// Regularization schedules used in the rate experiments, as functions of n.
//
//   oracle_unweighted : lambda = n^{-1/(2r+beta)}          (rate n^{-r/(2r+beta)})
//   clipped           : lambda = n^{-1/(2r+beta) + eps/r}  (rate n^{-r/(2r+beta)+eps})
//   normalized        : lambda = n^{-1/(min(2r,3)+beta+alpha(1-beta))}
//                       (norm-rate exponent min(r,3/2)/(min(2r,3)+beta+alpha(1-beta)),
//                        saturating at r = 3/2)
enum class ScheduleKind { normalized_saturating, clipped_highsmooth, oracle_unweighted };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::normalized_saturating: return "normalized_saturating";
        case ScheduleKind::clipped_highsmooth: return "clipped_highsmooth";
        case ScheduleKind::oracle_unweighted: return "oracle_unweighted";
    }
    return "?";
}

struct LambdaSchedule {
    double lambda = 0.0;            // nominal schedule value
    long steps = 0;                 // Landweber iteration count (0 otherwise)
    double lambda_effective = 0.0;  // 1/steps for Landweber, else == lambda
};

inline double schedule_exponent(ScheduleKind kind, double r, double beta, double alpha,
                                double epsilon) {
    if (!(r >= 0.5) || !(beta > 0.0) || beta > 1.0) {
        throw contract_error("schedule_exponent: need r >= 1/2 and beta in (0,1]");
    }
    switch (kind) {
        case ScheduleKind::oracle_unweighted:
            return -1.0 / (2.0 * r + beta);
        case ScheduleKind::clipped_highsmooth: {
            if (!(epsilon > 0.0) || !(epsilon < r / (2.0 * r + beta))) {
                throw contract_error("schedule_exponent: epsilon must lie in (0, r/(2r+beta))");
            }
            return -1.0 / (2.0 * r + beta) + epsilon / r;
        }
        case ScheduleKind::normalized_saturating: {
            if (!(alpha >= 0.0) || alpha > 1.0) {
                throw contract_error("schedule_exponent: alpha must lie in [0,1]");
            }
            const double denom = std::min(2.0 * r, 3.0) + beta + alpha * (1.0 - beta);
            if (beta + alpha * (1.0 - beta) < 1.0 - 1e-12) {
                throw contract_error(
                    "schedule_exponent: normalized schedule needs beta + alpha(1-beta) >= 1");
            }
            return -1.0 / denom;
        }
    }
    throw contract_error("schedule_exponent: unknown schedule");
}

inline LambdaSchedule lambda_schedule(ScheduleKind kind, std::size_t n, double r, double beta,
                                      double alpha, double epsilon, FilterKind filter) {
    if (n == 0) throw contract_error("lambda_schedule: n must be >= 1");
    LambdaSchedule out;
    out.lambda = std::pow(static_cast<double>(n), schedule_exponent(kind, r, beta, alpha, epsilon));
    if (filter == FilterKind::landweber) {
        out.steps = std::max<long>(1, std::lround(1.0 / out.lambda));
        out.lambda_effective = 1.0 / static_cast<double>(out.steps);
    } else {
        out.steps = 0;
        out.lambda_effective = out.lambda;
    }
    return out;
}

// Norm-rate exponent predicted for each schedule (risk decays as n^{-2*this}).
inline double theoretical_norm_exponent(ScheduleKind kind, double r, double beta, double alpha,
                                        double epsilon) {
    switch (kind) {
        case ScheduleKind::oracle_unweighted:
            return r / (2.0 * r + beta);
        case ScheduleKind::clipped_highsmooth:
            return r / (2.0 * r + beta) - epsilon;
        case ScheduleKind::normalized_saturating: {
            const double denom = std::min(2.0 * r, 3.0) + beta + alpha * (1.0 - beta);
            return std::min(r, 1.5) / denom;
        }
    }
    throw contract_error("theoretical_norm_exponent: unknown schedule");
}

}  // namespace specshift
