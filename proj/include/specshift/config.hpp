#pragma once

// JSON configuration for experiment sweeps.
//
// Parsing is strict: unknown keys are hard errors (a silently ignored typo
// in "epsilon" would invalidate a whole sweep), while omitted keys take the
// documented defaults.  Serialization uses ordered maps so a config written
// back out is stable byte-for-byte.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "specshift/errors.hpp"
#include "specshift/experiment.hpp"

namespace specshift {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void require_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
    if (!j.is_object()) {
        throw contract_error(std::string("config: '") + where + "' must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw contract_error(std::string("config: unknown key '") + key + "' in " + where);
        }
    }
}

template <typename T>
void maybe_get(const ordered_json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

inline FilterKind parse_filter_kind(const std::string& s) {
    if (s == "tikhonov") return FilterKind::tikhonov;
    if (s == "landweber") return FilterKind::landweber;
    if (s == "cutoff") return FilterKind::cutoff;
    throw contract_error("config: unknown filter '" + s + "'");
}

inline ShiftFamily parse_shift_family(const std::string& s) {
    if (s == "none") return ShiftFamily::none;
    if (s == "bounded") return ShiftFamily::bounded;
    if (s == "log") return ShiftFamily::log_tail;
    throw contract_error("config: unknown shift family '" + s + "'");
}

inline WeightSchemeKind parse_weight_kind(const std::string& s) {
    if (s == "unweighted") return WeightSchemeKind::unweighted;
    if (s == "exact") return WeightSchemeKind::exact;
    if (s == "normalized") return WeightSchemeKind::normalized;
    if (s == "clipped") return WeightSchemeKind::clipped;
    throw contract_error("config: unknown weight scheme '" + s + "'");
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "normalized_saturating") return ScheduleKind::normalized_saturating;
    if (s == "clipped_highsmooth") return ScheduleKind::clipped_highsmooth;
    if (s == "oracle_unweighted") return ScheduleKind::oracle_unweighted;
    throw contract_error("config: unknown schedule '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const ordered_json& j) {
    detail::require_keys(j, {"problem", "shift", "filter", "n_grid", "trials", "schemes"},
                         "config root");
    ExperimentConfig cfg;

    if (auto it = j.find("problem"); it != j.end()) {
        detail::require_keys(*it, {"beta", "r", "m", "noise", "seed"}, "problem");
        detail::maybe_get(*it, "beta", cfg.problem.beta);
        detail::maybe_get(*it, "r", cfg.problem.r);
        detail::maybe_get(*it, "m", cfg.problem.m);
        detail::maybe_get(*it, "noise", cfg.problem.noise);
        detail::maybe_get(*it, "seed", cfg.seed);
    }
    if (auto it = j.find("shift"); it != j.end()) {
        detail::require_keys(*it, {"family", "a", "alpha", "C", "sigma"}, "shift");
        if (auto f = it->find("family"); f != it->end()) {
            cfg.shift.family = detail::parse_shift_family(f->get<std::string>());
        }
        detail::maybe_get(*it, "a", cfg.shift.amplitude);
        detail::maybe_get(*it, "alpha", cfg.shift.alpha);
        detail::maybe_get(*it, "C", cfg.shift.C);
        detail::maybe_get(*it, "sigma", cfg.shift.sigma);
    }
    if (auto it = j.find("filter"); it != j.end()) {
        detail::require_keys(*it, {"kind", "t"}, "filter");
        if (auto k = it->find("kind"); k != it->end()) {
            cfg.filter = detail::parse_filter_kind(k->get<std::string>());
        }
        detail::maybe_get(*it, "t", cfg.filter_t);
    }
    detail::maybe_get(j, "n_grid", cfg.n_grid);
    detail::maybe_get(j, "trials", cfg.trials);
    if (auto it = j.find("schemes"); it != j.end()) {
        if (!it->is_array()) throw contract_error("config: 'schemes' must be an array");
        for (const auto& js : *it) {
            detail::require_keys(js, {"name", "weights", "schedule", "epsilon"}, "scheme");
            SchemeConfig sc;
            detail::maybe_get(js, "name", sc.name);
            if (auto w = js.find("weights"); w != js.end()) {
                sc.weights = detail::parse_weight_kind(w->get<std::string>());
            }
            if (auto s = js.find("schedule"); s != js.end()) {
                sc.schedule = detail::parse_schedule_kind(s->get<std::string>());
            }
            detail::maybe_get(js, "epsilon", sc.epsilon);
            if (sc.name.empty()) sc.name = to_string(sc.weights);
            cfg.schemes.push_back(std::move(sc));
        }
    }
    return cfg;
}

inline ordered_json to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["problem"] = {{"beta", cfg.problem.beta},
                    {"r", cfg.problem.r},
                    {"m", cfg.problem.m},
                    {"noise", cfg.problem.noise},
                    {"seed", cfg.seed}};
    j["shift"] = {{"family", to_string(cfg.shift.family)},
                  {"a", cfg.shift.amplitude},
                  {"alpha", cfg.shift.alpha},
                  {"C", cfg.shift.C},
                  {"sigma", cfg.shift.sigma}};
    j["filter"] = {{"kind", to_string(cfg.filter)}, {"t", cfg.filter_t}};
    j["n_grid"] = cfg.n_grid;
    j["trials"] = cfg.trials;
    j["schemes"] = ordered_json::array();
    for (const auto& sc : cfg.schemes) {
        j["schemes"].push_back({{"name", sc.name},
                                {"weights", to_string(sc.weights)},
                                {"schedule", to_string(sc.schedule)},
                                {"epsilon", sc.epsilon}});
    }
    return j;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw contract_error("config: cannot open '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw contract_error(std::string("config: JSON parse error: ") + e.what());
    }
    return parse_experiment_config(j);
}

// Environment override for the sweep seed; returns true when applied.
inline bool apply_env_seed(ExperimentConfig& cfg) {
    const char* env = std::getenv("SPECTRAL_SHIFT_SEED");
    if (env == nullptr || *env == '\0') return false;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw contract_error("SPECTRAL_SHIFT_SEED must be a nonnegative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(v);
    return true;
}

}  // namespace specshift
