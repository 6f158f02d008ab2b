#pragma once

// Fitted-model persistence: a small line-oriented text format that
// round-trips bit-exactly (all doubles via shortest round-trip rendering).
//
//   specshift-model 1
//   kernel rbf <bandwidth> | kernel basis <m> <mu_1> ... <mu_m>
//   rescale <rho>
//   lambda <lambda_effective>
//   n <count>
//   anchors <x_1> ... <x_n>
//   sqrt_weights <s_1> ... <s_n>
//   coefficients <c_1> ... <c_n>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specshift/csv.hpp"
#include "specshift/errors.hpp"
#include "specshift/estimator.hpp"

namespace specshift {

namespace detail {

inline void write_series(std::ostream& out, const char* tag, const std::vector<double>& v) {
    out << tag;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
}

inline std::vector<std::string> tokens(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

inline std::vector<std::string> expect_line(std::istream& in, const char* tag,
                                            std::size_t min_tokens) {
    std::string line;
    if (!std::getline(in, line)) {
        throw contract_error(std::string("load_model: missing '") + tag + "' line");
    }
    auto tok = tokens(line);
    if (tok.empty() || tok[0] != tag || tok.size() < min_tokens) {
        throw contract_error(std::string("load_model: malformed '") + tag + "' line");
    }
    return tok;
}

inline std::vector<double> parse_series(const std::vector<std::string>& tok, std::size_t n) {
    if (tok.size() != n + 1) {
        throw contract_error("load_model: '" + tok[0] + "' has wrong element count");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = parse_double(tok[i + 1]);
    return out;
}

}  // namespace detail

inline void save_model(const SpectralEstimator& est, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw contract_error("save_model: cannot open '" + path + "'");
    out << "specshift-model 1\n";
    if (est.kernel().is_basis()) {
        const auto& mu = est.kernel().eigenvalues();
        out << "kernel basis " << mu.size();
        for (double m : mu) out << ' ' << format_double(m);
        out << '\n';
    } else {
        out << "kernel rbf " << format_double(est.kernel().bandwidth()) << '\n';
    }
    out << "rescale " << format_double(est.rescale()) << '\n';
    out << "lambda " << format_double(est.lambda_effective()) << '\n';
    out << "n " << est.anchors().size() << '\n';
    detail::write_series(out, "anchors", est.anchors());
    detail::write_series(out, "sqrt_weights", est.sqrt_weights());
    detail::write_series(out, "coefficients", est.coefficients());
    if (!out) throw numeric_error("save_model: write failed for '" + path + "'");
}

inline SpectralEstimator load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw contract_error("load_model: cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (header != "specshift-model 1") {
        throw contract_error("load_model: unrecognized header '" + header + "'");
    }

    auto ktok = detail::expect_line(in, "kernel", 2);
    KernelSpec kernel = [&] {
        if (ktok[1] == "rbf") {
            if (ktok.size() != 3) throw contract_error("load_model: malformed rbf kernel line");
            return KernelSpec::gaussian_rbf(parse_double(ktok[2]));
        }
        if (ktok[1] == "basis") {
            if (ktok.size() < 3) throw contract_error("load_model: malformed basis kernel line");
            const auto m = static_cast<std::size_t>(parse_long(ktok[2]));
            if (ktok.size() != m + 3) {
                throw contract_error("load_model: basis kernel eigenvalue count mismatch");
            }
            std::vector<double> mu(m);
            for (std::size_t i = 0; i < m; ++i) mu[i] = parse_double(ktok[i + 3]);
            return KernelSpec::truncated_basis(mu);
        }
        throw contract_error("load_model: unknown kernel type '" + ktok[1] + "'");
    }();

    const double rescale = parse_double(detail::expect_line(in, "rescale", 2)[1]);
    const double lambda = parse_double(detail::expect_line(in, "lambda", 2)[1]);
    const auto n = static_cast<std::size_t>(parse_long(detail::expect_line(in, "n", 2)[1]));
    auto anchors = detail::parse_series(detail::expect_line(in, "anchors", 1), n);
    auto sw = detail::parse_series(detail::expect_line(in, "sqrt_weights", 1), n);
    auto coef = detail::parse_series(detail::expect_line(in, "coefficients", 1), n);
    return SpectralEstimator(std::move(anchors), std::move(sw), std::move(coef),
                             std::move(kernel), rescale, lambda);
}

}  // namespace specshift
