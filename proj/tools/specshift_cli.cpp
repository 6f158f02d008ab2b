// specshift: weighted spectral regression under covariate shift.
//
// Subcommands
//   fit            fit a model from a dataset CSV and serialize it
//   predict        load a model and evaluate it at points from a CSV
//   simulate       run a configured rate-experiment sweep to a results CSV
//   rates          log-log rate fit of a results CSV vs the predicted exponent
//   diagnose       run the operator-inequality suites (exit 3 on any failure)
//   filters-check  verify the filter calculus bounds on dense grids (exit 3 on failure)
//   plot           render per-scheme median risk curves from a results CSV as SVG
//
// Exit codes: 0 success, 1 contract/usage error, 2 numeric failure,
// 3 diagnostic or verification failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "specshift/config.hpp"
#include "specshift/csv.hpp"
#include "specshift/diagnostics.hpp"
#include "specshift/errors.hpp"
#include "specshift/estimator.hpp"
#include "specshift/experiment.hpp"
#include "specshift/filters.hpp"
#include "specshift/kernels.hpp"
#include "specshift/metrics.hpp"
#include "specshift/model_io.hpp"
#include "specshift/shift_weights.hpp"
#include "specshift/svg.hpp"
#include "specshift/synthetic.hpp"

namespace {

using namespace specshift;

// Thrown when a check ran to completion and failed (exit 3, not an error).
struct check_failed : std::exception {
    const char* what() const noexcept override { return "verification failed"; }
};

struct FitArgs {
    std::string data_path;
    std::string out_path;
    std::string kernel = "basis";
    double bandwidth = 0.1;
    double beta = 0.5;
    std::size_t m = 512;
    std::string filter = "tikhonov";
    long t = 0;
    double lambda = 0.0;
    std::string scheme = "unweighted";
    double clip = 0.0;
    std::string shift_family = "none";
    double shift_a = 0.0;
};

Dataset read_dataset_csv(const std::string& path, const ShiftSpec* shift) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw contract_error("fit: dataset CSV is empty");
    const auto& header = rows[0];
    const bool has_w = header.size() == 3 && header[2] == "w";
    if (!(header.size() >= 2 && header[0] == "x" && header[1] == "y") ||
        (header.size() == 3 && !has_w) || header.size() > 3) {
        throw contract_error("fit: dataset CSV header must be 'x,y' or 'x,y,w'");
    }
    Dataset d;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            throw contract_error("fit: dataset CSV row has wrong field count");
        }
        d.x.push_back(parse_double(rows[i][0]));
        d.y.push_back(parse_double(rows[i][1]));
        if (has_w) d.raw_weights.push_back(parse_double(rows[i][2]));
    }
    if (!has_w && shift != nullptr && shift->family() != ShiftFamily::none) {
        for (double x : d.x) d.raw_weights.push_back(shift->density_ratio(x));
    }
    return d;
}

FilterSpec make_filter(const std::string& kind, long t) {
    if (kind == "tikhonov") return FilterSpec::tikhonov();
    if (kind == "landweber") {
        if (t < 1) throw contract_error("landweber filter needs --t >= 1");
        return FilterSpec::landweber(t);
    }
    if (kind == "cutoff") return FilterSpec::spectral_cutoff();
    throw contract_error("unknown filter '" + kind + "'");
}

int cmd_fit(const FitArgs& a) {
    KernelSpec kernel = [&] {
        if (a.kernel == "rbf") return KernelSpec::gaussian_rbf(a.bandwidth);
        if (a.kernel == "basis") {
            if (!(a.beta > 0.0) || a.beta > 1.0) {
                throw contract_error("fit: --beta must lie in (0,1]");
            }
            std::vector<double> mu(a.m);
            for (std::size_t k = 0; k < a.m; ++k) {
                mu[k] = std::pow(static_cast<double>(k + 1), -1.0 / a.beta);
            }
            return KernelSpec::truncated_basis(mu);
        }
        throw contract_error("fit: unknown kernel '" + a.kernel + "' (rbf|basis)");
    }();
    const FilterSpec filter = make_filter(a.filter, a.t);
    const double lambda =
        filter.kind() == FilterKind::landweber && a.lambda <= 0.0
            ? 1.0 / static_cast<double>(filter.steps())
            : a.lambda;

    WeightScheme scheme = [&] {
        if (a.scheme == "unweighted") return WeightScheme::unweighted();
        if (a.scheme == "exact") return WeightScheme::exact();
        if (a.scheme == "normalized") return WeightScheme::normalized();
        if (a.scheme == "clipped") return WeightScheme::clipped(a.clip);
        throw contract_error("fit: unknown scheme '" + a.scheme + "'");
    }();

    ShiftSpec shift = [&] {
        if (a.shift_family == "none") return ShiftSpec::none();
        if (a.shift_family == "bounded") return ShiftSpec::bounded(a.shift_a);
        if (a.shift_family == "log") return ShiftSpec::log_tail();
        throw contract_error("fit: unknown shift family '" + a.shift_family + "'");
    }();

    const Dataset data = read_dataset_csv(a.data_path, &shift);
    const auto est = fit(data, kernel, filter, lambda, scheme);
    save_model(est, a.out_path);
    std::printf("fit: n=%zu lambda=%s rescale=%s -> %s\n", data.size(),
                format_double(est.lambda_effective()).c_str(),
                format_double(est.rescale()).c_str(), a.out_path.c_str());
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& points_path,
                const std::string& out_path) {
    const auto est = load_model(model_path);
    const auto rows = read_csv(points_path);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "x") {
        throw contract_error("predict: points CSV must have header 'x'");
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw contract_error("predict: cannot open '" + out_path + "'");
    out << "x,prediction\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double x = parse_double(rows[i][0]);
        out << format_double(x) << ',' << format_double(est.predict(x)) << '\n';
    }
    if (!out) throw numeric_error("predict: write failed");
    std::printf("predict: %zu points -> %s\n", rows.size() - 1, out_path.c_str());
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path, std::size_t jobs) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (apply_env_seed(cfg)) {
        std::fprintf(stderr, "simulate: seed overridden by SPECTRAL_SHIFT_SEED=%llu\n",
                     static_cast<unsigned long long>(cfg.seed));
    }
    const auto records = run_experiment(cfg, jobs);
    write_records_csv(records, out_path);
    double total_ms = 0.0;
    std::size_t failed = 0;
    for (const auto& r : records) {
        total_ms += r.wall_ms;
        if (r.status != "ok") ++failed;
    }
    std::fprintf(stderr, "simulate: %zu cells (%zu non-ok), %.0f ms compute\n", records.size(),
                 failed, total_ms);
    std::printf("simulate: wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_rates(const std::string& in_path, const std::string& schedule, double r, double beta,
              double alpha, double epsilon, const std::string& only_scheme) {
    const auto records = read_records_csv(in_path);
    const auto rates = rates_by_scheme(records);
    if (rates.empty()) throw contract_error("rates: no ok records in input");
    const ScheduleKind kind = [&] {
        if (schedule == "oracle_unweighted") return ScheduleKind::oracle_unweighted;
        if (schedule == "clipped_highsmooth") return ScheduleKind::clipped_highsmooth;
        if (schedule == "normalized_saturating") return ScheduleKind::normalized_saturating;
        throw contract_error("rates: unknown schedule '" + schedule + "'");
    }();
    const double predicted = -theoretical_norm_exponent(kind, r, beta, alpha, epsilon);
    bool any = false;
    for (const auto& [scheme, fit] : rates) {
        if (!only_scheme.empty() && scheme != only_scheme) continue;
        any = true;
        std::printf(
            "scheme=%s levels=%zu risk_slope=%s stderr=%s norm_slope=%s predicted=%s\n",
            scheme.c_str(), fit.levels, format_double(fit.slope).c_str(),
            format_double(fit.stderr_).c_str(), format_double(fit.slope / 2.0).c_str(),
            format_double(predicted).c_str());
    }
    if (!any) throw contract_error("rates: scheme '" + only_scheme + "' not present in input");
    return 0;
}

int cmd_diagnose(std::uint64_t seed, std::size_t cases, const std::string& out_path) {
    const auto report = run_diagnostics(seed, cases);
    std::vector<std::string> lines;
    lines.push_back("suite,cases,failures,worst_margin,pass");
    for (const auto& s : report.suites) {
        std::printf("%-18s cases=%zu failures=%zu worst_margin=%s %s\n", s.name.c_str(), s.cases,
                    s.failures, format_double(s.worst_margin).c_str(),
                    s.pass() ? "PASS" : "FAIL");
        for (const auto& ce : s.counterexamples) {
            std::printf("  counterexample: %s\n", ce.c_str());
        }
        lines.push_back(csv_join({s.name, std::to_string(s.cases), std::to_string(s.failures),
                                  format_double(s.worst_margin), s.pass() ? "1" : "0"}));
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw contract_error("diagnose: cannot open '" + out_path + "'");
        for (const auto& l : lines) out << l << '\n';
    }
    if (!report.pass()) throw check_failed{};
    return 0;
}

int cmd_filters_check(const std::string& only, std::size_t lambda_points, std::size_t u_points,
                      const std::string& out_path) {
    std::vector<double> lambda_grid(lambda_points);
    for (std::size_t i = 0; i < lambda_points; ++i) {
        // log-spaced in [1e-6, 1]
        const double f = lambda_points == 1
                             ? 1.0
                             : static_cast<double>(i) / static_cast<double>(lambda_points - 1);
        lambda_grid[i] = std::pow(10.0, -6.0 * (1.0 - f));
    }
    std::vector<double> u_grid(u_points);
    for (std::size_t i = 0; i < u_points; ++i) {
        u_grid[i] = u_points == 1
                        ? 1.0
                        : static_cast<double>(i) / static_cast<double>(u_points - 1);
    }
    const std::vector<double> nu_list = {0.5, 1.0, 1.5, 2.0};

    std::vector<FilterSpec> filters;
    if (only.empty() || only == "tikhonov") filters.push_back(FilterSpec::tikhonov());
    if (only.empty() || only == "landweber") filters.push_back(FilterSpec::landweber(16));
    if (only.empty() || only == "cutoff") filters.push_back(FilterSpec::spectral_cutoff());
    if (filters.empty()) throw contract_error("filters-check: unknown filter '" + only + "'");

    std::vector<std::string> lines;
    lines.push_back("filter,b,qualification,worst_sup_ratio,worst_product,nu,gamma,residual_ratio,pass");
    bool all_pass = true;
    for (const auto& f : filters) {
        const auto rep = verify_filter_conditions(f, lambda_grid, u_grid, nu_list);
        all_pass = all_pass && rep.pass;
        const std::string qual =
            std::isinf(rep.qualification) ? "inf" : format_double(rep.qualification);
        std::printf("%-10s b=%s qual=%s sup_ratio=%s prod=%s %s\n", to_string(rep.kind),
                    format_double(rep.b).c_str(), qual.c_str(),
                    format_double(rep.worst_sup_ratio).c_str(),
                    format_double(rep.worst_product).c_str(), rep.pass ? "PASS" : "FAIL");
        for (const auto& rc : rep.residuals) {
            std::printf("    nu=%s gamma=%s worst_ratio=%s %s\n", format_double(rc.nu).c_str(),
                        format_double(rc.gamma).c_str(), format_double(rc.worst_ratio).c_str(),
                        rc.ok ? "ok" : "VIOLATION");
            lines.push_back(csv_join({to_string(rep.kind), format_double(rep.b), qual,
                                      format_double(rep.worst_sup_ratio),
                                      format_double(rep.worst_product), format_double(rc.nu),
                                      format_double(rc.gamma), format_double(rc.worst_ratio),
                                      rc.ok && rep.bounds_ok ? "1" : "0"}));
        }
        for (double nu : rep.skipped_nu) {
            std::printf("    nu=%s skipped (beyond qualification)\n", format_double(nu).c_str());
        }
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw contract_error("filters-check: cannot open '" + out_path + "'");
        for (const auto& l : lines) out << l << '\n';
    }
    if (!all_pass) throw check_failed{};
    return 0;
}

int cmd_plot(const std::string& in_path, const std::string& out_path, const std::string& title) {
    const auto records = read_records_csv(in_path);
    write_rate_plot_svg(records, out_path, title);
    std::printf("plot: wrote %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted spectral regression under covariate shift"};
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model from a dataset CSV");
    fit_cmd->add_option("--data", fa.data_path, "input CSV with header x,y or x,y,w")->required();
    fit_cmd->add_option("--out", fa.out_path, "output model path")->required();
    fit_cmd->add_option("--kernel", fa.kernel, "kernel: rbf|basis (default basis)");
    fit_cmd->add_option("--bandwidth", fa.bandwidth, "rbf bandwidth");
    fit_cmd->add_option("--beta", fa.beta, "basis kernel: mu_k = k^(-1/beta)");
    fit_cmd->add_option("--m", fa.m, "basis kernel rank");
    fit_cmd->add_option("--filter", fa.filter, "tikhonov|landweber|cutoff");
    fit_cmd->add_option("--t", fa.t, "landweber step count");
    fit_cmd->add_option("--lambda", fa.lambda, "regularization (landweber default: 1/t)");
    fit_cmd->add_option("--scheme", fa.scheme, "unweighted|exact|normalized|clipped");
    fit_cmd->add_option("--clip", fa.clip, "clipping threshold (clipped scheme)");
    fit_cmd->add_option("--shift", fa.shift_family,
                        "shift family used to derive absent weights: none|bounded|log");
    fit_cmd->add_option("--a", fa.shift_a, "bounded shift amplitude");

    std::string model_path, points_path, pred_out;
    auto* predict_cmd = app.add_subcommand("predict", "evaluate a saved model at points");
    predict_cmd->add_option("--model", model_path, "model file from fit")->required();
    predict_cmd->add_option("--points", points_path, "CSV with header x")->required();
    predict_cmd->add_option("--out", pred_out, "output CSV (x,prediction)")->required();

    std::string sim_config, sim_out;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sim_cmd = app.add_subcommand("simulate", "run a configured sweep to a results CSV");
    sim_cmd->add_option("--config", sim_config, "experiment config JSON")->required();
    sim_cmd->add_option("--out", sim_out, "output results CSV")->required();
    sim_cmd->add_option("--jobs", jobs, "worker threads (default: logical cores)");

    std::string rates_in, rates_schedule, rates_scheme;
    double rates_r = 1.0, rates_beta = 0.5, rates_alpha = 1.0, rates_eps = 0.0;
    auto* rates_cmd =
        app.add_subcommand("rates", "estimate log-log rates and compare to the predicted exponent");
    rates_cmd->add_option("--in", rates_in, "results CSV from simulate")->required();
    rates_cmd
        ->add_option("--schedule", rates_schedule,
                     "oracle_unweighted|clipped_highsmooth|normalized_saturating")
        ->required();
    rates_cmd->add_option("--r", rates_r, "source smoothness");
    rates_cmd->add_option("--beta", rates_beta, "spectral decay");
    rates_cmd->add_option("--alpha", rates_alpha, "moment/tail index");
    rates_cmd->add_option("--epsilon", rates_eps, "clipped schedule exponent");
    rates_cmd->add_option("--scheme", rates_scheme, "restrict to one scheme label");

    std::uint64_t diag_seed = 20260816ULL;
    std::size_t diag_cases = 200;
    std::string diag_out;
    auto* diag_cmd = app.add_subcommand("diagnose", "run the operator-inequality suites");
    diag_cmd->add_option("--seed", diag_seed, "rng seed");
    diag_cmd->add_option("--cases", diag_cases, "cases per suite");
    diag_cmd->add_option("--out", diag_out, "write the pass/fail table CSV here");

    std::string fc_only, fc_out;
    std::size_t fc_lambda = 400, fc_u = 1000;
    auto* fc_cmd = app.add_subcommand("filters-check", "verify filter calculus bounds on grids");
    fc_cmd->add_option("--filter", fc_only, "restrict to one filter");
    fc_cmd->add_option("--lambda-points", fc_lambda, "lambda grid size");
    fc_cmd->add_option("--u-points", fc_u, "spectrum grid size");
    fc_cmd->add_option("--out", fc_out, "write the per-bound table CSV here");

    std::string plot_in, plot_out, plot_title = "median excess risk vs n";
    auto* plot_cmd = app.add_subcommand("plot", "render rate curves from a results CSV as SVG");
    plot_cmd->add_option("--in", plot_in, "results CSV from simulate")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG path")->required();
    plot_cmd->add_option("--title", plot_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 1;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fa);
        if (predict_cmd->parsed()) return cmd_predict(model_path, points_path, pred_out);
        if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_out, jobs);
        if (rates_cmd->parsed()) {
            return cmd_rates(rates_in, rates_schedule, rates_r, rates_beta, rates_alpha, rates_eps,
                             rates_scheme);
        }
        if (diag_cmd->parsed()) return cmd_diagnose(diag_seed, diag_cases, diag_out);
        if (fc_cmd->parsed()) return cmd_filters_check(fc_only, fc_lambda, fc_u, fc_out);
        if (plot_cmd->parsed()) return cmd_plot(plot_in, plot_out, plot_title);
        std::fprintf(stderr, "no subcommand selected\n");
        return 1;
    } catch (const check_failed&) {
        std::fprintf(stderr, "FAILED: verification did not pass\n");
        return 3;
    } catch (const contract_error& e) {
        std::fprintf(stderr, "contract error: %s\n", e.what());
        return 1;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "contract error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "contract error: %s\n", e.what());
        return 1;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    }
}
