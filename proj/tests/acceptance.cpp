// Acceptance suite: one line per criterion, [PASS]/[FAIL], exit 3 on any
// failure.  Tolerances and budgets are pinned here as constexpr values; the
// randomized criteria use fixed seeds so every run reproduces the same
// numbers bit for bit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <Eigen/Dense>

#include "specshift/diagnostics.hpp"
#include "specshift/estimator.hpp"
#include "specshift/experiment.hpp"
#include "specshift/filters.hpp"
#include "specshift/kernels.hpp"
#include "specshift/metrics.hpp"
#include "specshift/rng.hpp"
#include "specshift/shift_weights.hpp"
#include "specshift/synthetic.hpp"

namespace {

using namespace specshift;
namespace fs = std::filesystem;

// --- pinned tolerances -----------------------------------------------------
constexpr double kSpectralVsDirectTol = 1e-8;    // C2: relative agreement
constexpr double kIterativeVsSpectralTol = 1e-8; // C2: relative agreement
constexpr double kCollapseTol = 1e-12;           // C3: absolute prediction gap
constexpr double kRateBand = 0.15;               // C5/C6: norm-slope half-width
constexpr double kSaturationSlack = 0.05;        // C7: directional slack
constexpr double kEffDimFactor = 2.0;            // C8: allowed growth factor

// --- pinned budgets (seconds; 0 = no budget pinned) -------------------------
constexpr double kBudgetFilters = 10.0;
constexpr double kBudgetOracles = 30.0;
constexpr double kBudgetDiagnostics = 60.0;
constexpr double kBudgetRate = 600.0;
constexpr double kBudgetEffDim = 1.0;

struct Outcome {
    bool ok = false;
    std::string detail;
};

int g_failures = 0;

void run_criterion(const char* id, const char* label, double budget_s,
                   const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out.ok = false;
        out.detail = std::string("unexpected exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = budget_s <= 0.0 || secs <= budget_s;
    const bool ok = out.ok && in_budget;
    if (!ok) ++g_failures;
    std::printf("[%s] %s %s: %s (%.1fs", ok ? "PASS" : "FAIL", id, label, out.detail.c_str(),
                secs);
    if (budget_s > 0.0) std::printf(" / budget %.0fs%s", budget_s, in_budget ? "" : " EXCEEDED");
    std::printf(")\n");
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

Dataset random_dataset(rng_stream& rs, int n, bool with_weights) {
    Dataset d;
    for (int i = 0; i < n; ++i) {
        d.x.push_back(rs.uniform_open0());
        d.y.push_back(rs.normal());
        if (with_weights) d.raw_weights.push_back(0.2 + 2.0 * rs.uniform());
    }
    return d;
}

KernelSpec random_basis_kernel(rng_stream& rs, int max_rank = 8) {
    const int m = 1 + static_cast<int>(rs.bits() % static_cast<std::uint64_t>(max_rank));
    std::vector<double> mu(static_cast<std::size_t>(m));
    double cur = 0.3 + rs.uniform();
    for (int k = 0; k < m; ++k) {
        mu[static_cast<std::size_t>(k)] = cur;
        cur *= 0.3 + 0.6 * rs.uniform();
    }
    return KernelSpec::truncated_basis(mu);
}

// --- C1: filter calculus bounds on dense grids ------------------------------
Outcome c1_filter_conditions() {
    std::vector<double> lambda_grid(1000), u_grid(1000);
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(lambda_grid.size() - 1);
        lambda_grid[i] = std::pow(10.0, -6.0 * (1.0 - f));
    }
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        u_grid[i] = static_cast<double>(i) / static_cast<double>(u_grid.size() - 1);
    }
    const std::vector<double> nu_list = {0.5, 1.0, 2.0};

    std::ostringstream detail;
    bool all = true;
    for (const auto& f :
         {FilterSpec::tikhonov(), FilterSpec::landweber(16), FilterSpec::spectral_cutoff()}) {
        const auto rep = verify_filter_conditions(f, lambda_grid, u_grid, nu_list);
        all = all && rep.pass;
        detail << to_string(rep.kind) << "(sup_ratio=" << fmt(rep.worst_sup_ratio)
               << ",prod=" << fmt(rep.worst_product) << (rep.pass ? ") " : " VIOLATED) ");
    }
    return {all, detail.str() + "on 1000x1000 grids, nu={0.5,1,2}"};
}

// --- C2: spectral path vs direct solve / explicit iteration ------------------
Outcome c2_estimator_oracles() {
    rng_stream rs(20251);
    double worst_tik = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 5 + static_cast<int>(rs.bits() % 96);
        auto kernel = rep % 3 == 0 ? KernelSpec::gaussian_rbf(0.1 + 0.4 * rs.uniform())
                                   : random_basis_kernel(rs);
        auto d = random_dataset(rs, n, true);
        const double lambda = 0.15 * std::pow(10.0, -2.0 * rs.uniform());
        auto est = fit(d, kernel, FilterSpec::tikhonov(), lambda, WeightScheme::normalized());

        const auto v = effective_weights(d, WeightScheme::normalized());
        Eigen::VectorXd s(n), z(n);
        for (int i = 0; i < n; ++i) {
            s(i) = std::sqrt(v[static_cast<std::size_t>(i)]);
            z(i) = s(i) * d.y[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXd m =
            (s * s.transpose()).cwiseProduct(kernel.gram(d.x)) / static_cast<double>(n);
        Eigen::VectorXd c = (lambda * Eigen::MatrixXd::Identity(n, n) + m).ldlt().solve(z);
        double scale = 1.0, diff = 0.0;
        for (int i = 0; i < n; ++i) {
            diff = std::max(diff,
                            std::abs(c(i) - est.coefficients()[static_cast<std::size_t>(i)]));
            scale = std::max(scale, std::abs(c(i)));
        }
        worst_tik = std::max(worst_tik, diff / scale);
    }

    rng_stream rl(20252);
    double worst_land = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 5 + static_cast<int>(rl.bits() % 96);
        auto kernel = rep % 2 == 0 ? random_basis_kernel(rl)
                                   : KernelSpec::gaussian_rbf(0.1 + 0.4 * rl.uniform());
        auto d = random_dataset(rl, n, true);
        const auto v = effective_weights(d, WeightScheme::exact());
        const double rho =
            kernel.kappa() * kernel.kappa() * *std::max_element(v.begin(), v.end());
        const long t = static_cast<long>(std::ceil(1.0 / rho)) +
                       static_cast<long>(rl.bits() % 50);
        auto spec = fit(d, kernel, FilterSpec::landweber(t), 1.0 / static_cast<double>(t),
                        WeightScheme::exact());
        auto iter = fit_landweber_iterative(d, kernel, t, WeightScheme::exact());
        double scale = 1.0, diff = 0.0;
        for (int i = 0; i < n; ++i) {
            diff = std::max(diff, std::abs(spec.coefficients()[static_cast<std::size_t>(i)] -
                                           iter.coefficients()[static_cast<std::size_t>(i)]));
            scale = std::max(scale, std::abs(spec.coefficients()[static_cast<std::size_t>(i)]));
        }
        worst_land = std::max(worst_land, diff / scale);
    }

    const bool ok = worst_tik <= kSpectralVsDirectTol && worst_land <= kIterativeVsSpectralTol;
    return {ok, "tikhonov vs direct solve rel_err=" + fmt(worst_tik) +
                    ", landweber spectral vs iterative rel_err=" + fmt(worst_land) +
                    " (tol 1e-8, 50+50 instances)"};
}

// --- C3: all weight schemes collapse when there is no shift ------------------
Outcome c3_scheme_collapse() {
    rng_stream rs(20253);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        auto kernel = rep % 4 == 0 ? KernelSpec::gaussian_rbf(0.1 + 0.4 * rs.uniform())
                                   : random_basis_kernel(rs);
        const int n = 10 + static_cast<int>(rs.bits() % 40);
        auto d = random_dataset(rs, n, false);
        d.raw_weights.assign(d.size(), 1.0);  // no shift: density ratio is identically 1
        const double lambda = 0.15 * std::pow(10.0, -1.5 * rs.uniform());
        auto base = fit(d, kernel, FilterSpec::tikhonov(), lambda, WeightScheme::unweighted());
        for (const auto& scheme : {WeightScheme::exact(), WeightScheme::normalized(),
                                   WeightScheme::clipped(2.0)}) {
            auto est = fit(d, kernel, FilterSpec::tikhonov(), lambda, scheme);
            for (int g = 1; g <= 9; ++g) {
                const double x = 0.1 * g;
                worst = std::max(worst, std::abs(est.predict(x) - base.predict(x)));
            }
        }
    }
    return {worst <= kCollapseTol,
            "max prediction gap across {unweighted,exact,normalized,clipped(2)} = " + fmt(worst) +
                " (tol 1e-12, 20 instances)"};
}

// --- C4: operator-inequality suites ------------------------------------------
Outcome c4_diagnostics() {
    const auto report = run_diagnostics(20260816, 200);
    std::ostringstream detail;
    bool all = report.pass();
    for (const auto& s : report.suites) {
        detail << s.name << "(fail=" << s.failures << ",margin=" << fmt(s.worst_margin) << ") ";
        if (!s.counterexamples.empty()) detail << "[" << s.counterexamples[0] << "] ";
    }
    return {all, detail.str() + "200 cases/suite"};
}

// Shared runner for the rate criteria.
struct RateResult {
    RateFit fit;
    std::size_t cells = 0;
    std::size_t non_ok = 0;
};

RateResult run_rate(const ExperimentConfig& cfg, const std::string& scheme) {
    const auto records = run_experiment(cfg, 1);
    RateResult out;
    out.cells = records.size();
    for (const auto& r : records) {
        if (r.status != "ok") ++out.non_ok;
    }
    out.fit = rates_by_scheme(records).at(scheme);
    return out;
}

// --- C5: unweighted rate under a bounded shift --------------------------------
Outcome c5_bounded_rate() {
    ExperimentConfig cfg;
    cfg.problem = {0.5, 1.0, 512, 0.5};
    cfg.shift = {ShiftFamily::bounded, 0.5, 1.0, 1.0, 0.0};
    cfg.filter = FilterKind::tikhonov;
    cfg.n_grid = {256, 512, 1024, 2048, 4096, 8192};
    cfg.trials = 20;
    cfg.seed = 101;
    cfg.schemes = {{"unweighted", WeightSchemeKind::unweighted, ScheduleKind::oracle_unweighted,
                    0.0}};
    const auto res = run_rate(cfg, "unweighted");
    const double norm_slope = res.fit.slope / 2.0;
    const double target = -0.4;  // -r/(2r+beta) at r=1, beta=0.5
    const bool ok = std::abs(norm_slope - target) <= kRateBand && res.non_ok == 0;
    return {ok, "norm-slope=" + fmt(norm_slope) + " target=" + fmt(target) + "+/-" +
                    fmt(kRateBand) + " stderr=" + fmt(res.fit.stderr_ / 2.0) + " (" +
                    std::to_string(res.cells) + " cells, " + std::to_string(res.non_ok) +
                    " non-ok)"};
}

// --- C6: clipped-weight rate under the heavy-tailed shift ---------------------
Outcome c6_clipped_rate() {
    ExperimentConfig cfg;
    cfg.problem = {0.5, 1.0, 512, 0.5};
    cfg.shift = {ShiftFamily::log_tail, 0.0, 1.0, 1.0, 0.0};
    cfg.filter = FilterKind::tikhonov;
    cfg.n_grid = {256, 512, 1024, 2048, 4096, 8192};
    cfg.trials = 20;
    cfg.seed = 102;
    cfg.schemes = {{"clipped", WeightSchemeKind::clipped, ScheduleKind::clipped_highsmooth, 0.05}};
    const auto res = run_rate(cfg, "clipped");
    const double norm_slope = res.fit.slope / 2.0;
    const double target = -(1.0 / 2.5 - 0.05);  // -(r/(2r+beta) - eps) = -0.35
    const bool ok = std::abs(norm_slope - target) <= kRateBand && res.non_ok == 0;
    return {ok, "norm-slope=" + fmt(norm_slope) + " target=" + fmt(target) + "+/-" +
                    fmt(kRateBand) + " stderr=" + fmt(res.fit.stderr_ / 2.0) + " (" +
                    std::to_string(res.cells) + " cells, " + std::to_string(res.non_ok) +
                    " non-ok)"};
}

// --- C7: saturation direction at high smoothness -------------------------------
Outcome c7_saturation_direction() {
    ExperimentConfig cfg;
    // Noise level 4.0 keeps both schemes variance-dominated across this n
    // range, so the fitted slopes reflect the lambda-schedules rather than
    // the clipped scheme's slowly-shrinking truncation bias.
    cfg.problem = {1.0, 2.0, 512, 4.0};
    cfg.shift = {ShiftFamily::log_tail, 0.0, 1.0, 1.0, 0.0};
    cfg.filter = FilterKind::cutoff;  // unbounded qualification: no filter-side saturation
    cfg.n_grid = {512, 1024, 2048, 4096, 8192};
    cfg.trials = 30;
    cfg.seed = 103;
    cfg.schemes = {
        {"normalized", WeightSchemeKind::normalized, ScheduleKind::normalized_saturating, 0.0},
        {"clipped", WeightSchemeKind::clipped, ScheduleKind::clipped_highsmooth, 0.02}};
    const auto records = run_experiment(cfg, 1);
    std::size_t non_ok = 0;
    for (const auto& r : records) {
        if (r.status != "ok") ++non_ok;
    }
    const auto rates = rates_by_scheme(records);
    const double clip = rates.at("clipped").slope / 2.0;
    const double norm = rates.at("normalized").slope / 2.0;
    // The clipped scheme must converge at least as fast (slopes are negative).
    const bool ok = clip <= norm + kSaturationSlack && non_ok == 0;
    return {ok, "clipped norm-slope=" + fmt(clip) + " vs normalized=" + fmt(norm) +
                    " (require clipped <= normalized+" + fmt(kSaturationSlack) +
                    "; theory caps normalized at -0.375, clipped approaches -0.38; " +
                    std::to_string(non_ok) + " non-ok)"};
}

// --- C8: polynomial effective-dimension growth --------------------------------
Outcome c8_effective_dimension() {
    std::ostringstream detail;
    bool all = true;
    for (double beta : {0.5, 1.0}) {
        const std::size_t m = 65536;
        std::vector<double> mu(m);
        for (std::size_t k = 0; k < m; ++k) {
            mu[k] = std::pow(static_cast<double>(k + 1), -1.0 / beta);
        }
        double worst = 0.0;
        for (int i = 0; i < 25; ++i) {
            const double lambda = std::pow(10.0, -4.0 + 4.0 * static_cast<double>(i) / 24.0);
            worst = std::max(worst,
                             effective_dimension(mu, lambda) * std::pow(lambda, beta));
        }
        const double ref = effective_dimension(mu, 1e-2) * std::pow(1e-2, beta);
        const double ratio = worst / ref;
        all = all && ratio <= kEffDimFactor;
        detail << "beta=" << fmt(beta) << " max/ref=" << fmt(ratio) << " ";
    }
    return {all, detail.str() + "(factor limit 2, m=65536, 25-point lambda grid)"};
}

// --- C9: CLI-level byte determinism --------------------------------------------
int run_cli(const std::string& args) {
    const std::string cmd = "\"" SPECSHIFT_CLI_PATH "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c9_cli_determinism() {
    const auto dir = fs::temp_directory_path() / "specshift_acceptance";
    fs::create_directories(dir);
    const auto cfg_path = dir / "sweep.json";
    {
        std::ofstream cfg(cfg_path, std::ios::binary);
        cfg << R"({
  "problem": {"beta": 0.5, "r": 1.0, "m": 64, "noise": 0.5, "seed": 17},
  "shift": {"family": "log", "alpha": 1.0},
  "filter": {"kind": "tikhonov"},
  "n_grid": [64, 128, 256],
  "trials": 3,
  "schemes": [
    {"name": "unweighted", "weights": "unweighted", "schedule": "oracle_unweighted"},
    {"name": "normalized", "weights": "normalized", "schedule": "normalized_saturating"},
    {"name": "clipped", "weights": "clipped", "schedule": "clipped_highsmooth", "epsilon": 0.05}
  ]
})";
    }
    const auto a = dir / "a.csv", b = dir / "b.csv", c = dir / "c.csv";
    const std::string base = "simulate --config \"" + cfg_path.string() + "\" --out \"";
    if (run_cli(base + a.string() + "\" --jobs 1") != 0) return {false, "first run failed"};
    if (run_cli(base + b.string() + "\" --jobs 1") != 0) return {false, "second run failed"};
    if (run_cli(base + c.string() + "\" --jobs 4") != 0) return {false, "jobs=4 run failed"};
    const std::string bytes = slurp(a);
    if (bytes.empty()) return {false, "empty results CSV"};
    const bool rerun_same = slurp(b) == bytes;
    const bool jobs_same = slurp(c) == bytes;
    fs::remove_all(dir);
    return {rerun_same && jobs_same,
            std::string("rerun ") + (rerun_same ? "identical" : "DIFFERS") + ", jobs 1 vs 4 " +
                (jobs_same ? "identical" : "DIFFERS") + " (" + std::to_string(bytes.size()) +
                " bytes, 27 cells)"};
}

}  // namespace

int main() {
    std::printf("acceptance suite: weighted spectral regression under covariate shift\n");
    run_criterion("C1", "filter-calculus-bounds", kBudgetFilters, c1_filter_conditions);
    run_criterion("C2", "estimator-oracles", kBudgetOracles, c2_estimator_oracles);
    run_criterion("C3", "no-shift-scheme-collapse", 0.0, c3_scheme_collapse);
    run_criterion("C4", "operator-inequality-suites", kBudgetDiagnostics, c4_diagnostics);
    run_criterion("C5", "bounded-shift-unweighted-rate", kBudgetRate, c5_bounded_rate);
    run_criterion("C6", "heavy-tail-clipped-rate", kBudgetRate, c6_clipped_rate);
    run_criterion("C7", "saturation-direction", 0.0, c7_saturation_direction);
    run_criterion("C8", "effective-dimension-growth", kBudgetEffDim, c8_effective_dimension);
    run_criterion("C9", "cli-byte-determinism", 0.0, c9_cli_determinism);
    if (g_failures > 0) {
        std::printf("RESULT: %d criterion(s) failed\n", g_failures);
        return 3;
    }
    std::printf("RESULT: all criteria passed\n");
    return 0;
}
