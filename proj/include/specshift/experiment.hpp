#pragma once

// Rate-experiment sweeps: fit every (scheme, n, trial) cell of a grid on a
// synthetic problem and record the exact excess risk per cell.
//
// Determinism contract: the output rows depend only on the configuration
// (and its seed), never on thread count or scheduling.  Each cell derives
// its data from a stream keyed by (seed, trial, n); results are written into
// a preallocated slot addressed by cell index; and the CSV renders doubles
// in shortest round-trip form.  Wall-clock timings are kept in memory for
// reporting but serialized as a constant so files stay byte-identical.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "specshift/csv.hpp"
#include "specshift/errors.hpp"
#include "specshift/estimator.hpp"
#include "specshift/filters.hpp"
#include "specshift/metrics.hpp"
#include "specshift/shift_weights.hpp"
#include "specshift/synthetic.hpp"

namespace specshift {

struct ProblemConfig {
    double beta = 0.5;
    double r = 1.0;
    std::size_t m = 512;
    double noise = 0.5;

    bool operator==(const ProblemConfig&) const = default;
};

struct ShiftConfig {
    ShiftFamily family = ShiftFamily::none;
    double amplitude = 0.0;  // bounded family only
    double alpha = 1.0;      // moment/tail index driving schedules and thresholds
    double C = 1.0;          // moment constant
    double sigma = 0.0;      // 0 means "use the family default"

    bool operator==(const ShiftConfig&) const = default;
};

struct SchemeConfig {
    std::string name;  // row label in the CSV
    WeightSchemeKind weights = WeightSchemeKind::unweighted;
    ScheduleKind schedule = ScheduleKind::oracle_unweighted;
    double epsilon = 0.0;  // clipped schedule/threshold exponent

    bool operator==(const SchemeConfig&) const = default;
};

struct ExperimentConfig {
    ProblemConfig problem;
    ShiftConfig shift;
    FilterKind filter = FilterKind::tikhonov;
    long filter_t = 0;  // fixed Landweber step count; 0 = derive from the schedule
    std::vector<std::size_t> n_grid;
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    std::vector<SchemeConfig> schemes;

    bool operator==(const ExperimentConfig&) const = default;
};

inline ShiftSpec build_shift(const ShiftConfig& cfg) {
    ShiftSpec spec = [&] {
        switch (cfg.family) {
            case ShiftFamily::none: return ShiftSpec::none();
            case ShiftFamily::bounded: return ShiftSpec::bounded(cfg.amplitude);
            case ShiftFamily::log_tail: return ShiftSpec::log_tail();
        }
        throw contract_error("build_shift: unknown family");
    }();
    auto params = spec.moment_params();
    params.alpha = cfg.alpha;
    params.C = cfg.C;
    if (cfg.sigma > 0.0) params.sigma = cfg.sigma;
    return spec.with_moment_params(params.alpha, params.C, params.sigma);
}

struct RiskRecord {
    std::size_t n = 0;
    std::size_t trial = 0;
    std::string scheme;
    std::string filter;
    double lambda = 0.0;          // effective regularization used for the fit
    double clip_threshold = 0.0;  // D_n for clipped schemes, 0 otherwise
    double risk = 0.0;            // exact excess risk (NaN when status != ok)
    std::string status = "ok";
    double wall_ms = 0.0;  // in-memory only; serialized as a constant 0
};

namespace detail {

struct Cell {
    std::size_t scheme_idx = 0;
    std::size_t n = 0;
    std::size_t trial = 0;
};

}  // namespace detail

// Run the full sweep.  `jobs` is the worker-thread count (>= 1); the result
// vector is ordered scheme-major, then by n, then by trial, independent of
// how cells were scheduled.
inline std::vector<RiskRecord> run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1) {
    if (cfg.n_grid.empty()) throw contract_error("run_experiment: empty n grid");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] == 0) throw contract_error("run_experiment: n must be >= 1");
        if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
            throw contract_error("run_experiment: n grid must be strictly increasing");
        }
    }
    if (cfg.trials == 0) throw contract_error("run_experiment: trials must be >= 1");
    if (cfg.schemes.empty()) throw contract_error("run_experiment: no schemes configured");
    if (jobs == 0) throw contract_error("run_experiment: jobs must be >= 1");
    if (cfg.filter_t < 0) throw contract_error("run_experiment: filter t must be >= 1");
    if (cfg.filter_t > 0 && cfg.filter != FilterKind::landweber) {
        throw contract_error("run_experiment: fixed step count applies to Landweber only");
    }

    const SyntheticProblem problem =
        make_problem(cfg.problem.beta, cfg.problem.r, cfg.problem.m, cfg.problem.noise);
    const ShiftSpec shift = build_shift(cfg.shift);
    problem.kernel.kappa();  // materialize the shared cache before threads start

    // Validate every cell's schedule and threshold up front so configuration
    // errors surface deterministically, before any worker begins.
    std::vector<detail::Cell> cells;
    cells.reserve(cfg.schemes.size() * cfg.n_grid.size() * cfg.trials);
    for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
        const auto& sc = cfg.schemes[si];
        if (sc.name.empty()) throw contract_error("run_experiment: scheme needs a name");
        for (std::size_t n : cfg.n_grid) {
            (void)lambda_schedule(sc.schedule, n, cfg.problem.r, cfg.problem.beta, cfg.shift.alpha,
                                  sc.epsilon, cfg.filter);
            if (sc.weights == WeightSchemeKind::clipped) {
                (void)clipping_threshold(n, cfg.problem.r, cfg.shift.alpha, sc.epsilon,
                                         cfg.problem.beta);
            }
            for (std::size_t t = 0; t < cfg.trials; ++t) cells.push_back({si, n, t});
        }
    }

    std::vector<RiskRecord> records(cells.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(cells.size());

    const auto worker = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            const auto& cell = cells[idx];
            const auto& sc = cfg.schemes[cell.scheme_idx];
            RiskRecord rec;
            rec.n = cell.n;
            rec.trial = cell.trial;
            rec.scheme = sc.name;
            rec.filter = to_string(cfg.filter);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                auto sched = lambda_schedule(sc.schedule, cell.n, cfg.problem.r, cfg.problem.beta,
                                             cfg.shift.alpha, sc.epsilon, cfg.filter);
                if (cfg.filter == FilterKind::landweber && cfg.filter_t > 0) {
                    sched.steps = cfg.filter_t;
                    sched.lambda_effective = 1.0 / static_cast<double>(cfg.filter_t);
                }
                WeightScheme ws = [&] {
                    switch (sc.weights) {
                        case WeightSchemeKind::unweighted: return WeightScheme::unweighted();
                        case WeightSchemeKind::exact: return WeightScheme::exact();
                        case WeightSchemeKind::normalized: return WeightScheme::normalized();
                        case WeightSchemeKind::clipped:
                            rec.clip_threshold = clipping_threshold(
                                cell.n, cfg.problem.r, cfg.shift.alpha, sc.epsilon,
                                cfg.problem.beta);
                            return WeightScheme::clipped(rec.clip_threshold);
                    }
                    throw contract_error("run_experiment: unknown weight scheme");
                }();
                const FilterSpec filter = [&] {
                    switch (cfg.filter) {
                        case FilterKind::tikhonov: return FilterSpec::tikhonov();
                        case FilterKind::landweber: return FilterSpec::landweber(sched.steps);
                        case FilterKind::cutoff: return FilterSpec::spectral_cutoff();
                    }
                    throw contract_error("run_experiment: unknown filter");
                }();
                const Dataset data = sample_train(problem, shift, cell.n, cfg.seed, cell.trial);
                rec.lambda = sched.lambda_effective;
                const auto est = fit(data, problem.kernel, filter, sched.lambda_effective, ws);
                rec.risk = excess_risk_exact(est, problem);
            } catch (const numeric_error& e) {
                rec.risk = std::numeric_limits<double>::quiet_NaN();
                rec.status = std::string("numeric_error: ") + e.what();
            } catch (...) {
                failures[idx] = std::current_exception();
            }
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            records[idx] = std::move(rec);
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);  // lowest cell index wins: deterministic
    }
    return records;
}

inline const char* records_csv_header() {
    return "n,trial,scheme,filter,lambda,D_n,risk,status,wall_ms";
}

inline void write_records_csv(const std::vector<RiskRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw contract_error("write_records_csv: cannot open '" + path + "'");
    out << records_csv_header() << '\n';
    for (const auto& r : records) {
        out << csv_join({std::to_string(r.n), std::to_string(r.trial), r.scheme, r.filter,
                         format_double(r.lambda), format_double(r.clip_threshold),
                         format_double(r.risk), r.status, "0"})
            << '\n';
    }
    if (!out) throw numeric_error("write_records_csv: write failed for '" + path + "'");
}

inline std::vector<RiskRecord> read_records_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || csv_join(rows[0]) != records_csv_header()) {
        throw contract_error("read_records_csv: missing or unexpected header");
    }
    std::vector<RiskRecord> out;
    out.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i];
        if (f.size() != 9) throw contract_error("read_records_csv: wrong field count");
        RiskRecord r;
        r.n = static_cast<std::size_t>(parse_long(f[0]));
        r.trial = static_cast<std::size_t>(parse_long(f[1]));
        r.scheme = f[2];
        r.filter = f[3];
        r.lambda = parse_double(f[4]);
        r.clip_threshold = parse_double(f[5]);
        r.risk = parse_double(f[6]);
        r.status = f[7];
        r.wall_ms = parse_double(f[8]);
        out.push_back(std::move(r));
    }
    return out;
}

// Per-scheme log-log rate fits over the ok rows.
inline std::map<std::string, RateFit> rates_by_scheme(const std::vector<RiskRecord>& records) {
    std::map<std::string, std::vector<RatePoint>> points;
    for (const auto& r : records) {
        if (r.status == "ok") points[r.scheme].push_back({r.n, r.risk});
    }
    std::map<std::string, RateFit> out;
    for (auto& [scheme, pts] : points) out[scheme] = estimate_rate(pts);
    return out;
}

}  // namespace specshift
