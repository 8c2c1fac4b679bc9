#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcrc/errors.hpp"
#include "anchorcrc/records.hpp"
#include "anchorcrc/simulation.hpp"

namespace anchorcrc {

using json = nlohmann::json;

inline CellCounts parse_cell_counts(const json& j) {
    CellCounts counts;
    try {
        counts.n1 = j.at("n1").get<std::int64_t>();
        counts.n2 = j.at("n2").get<std::int64_t>();
        counts.n3 = j.at("n3").get<std::int64_t>();
        counts.n4 = j.at("n4").get<std::int64_t>();
        counts.n5 = j.at("n5").get<std::int64_t>();
        counts.n6 = j.at("n6").get<std::int64_t>();
        counts.n_tot = j.at("n_tot").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw InputError(std::string("counts file invalid: ") + e.what());
    }
    counts.validate();
    return counts;
}

inline json counts_to_json(const CellCounts& c) {
    return {{"n1", c.n1}, {"n2", c.n2}, {"n3", c.n3}, {"n4", c.n4},
            {"n5", c.n5}, {"n6", c.n6}, {"n_tot", c.n_tot}};
}

inline SimConfig parse_sim_setting(const json& j) {
    SimConfig cfg;
    try {
        cfg.name = j.value("name", std::string("setting"));
        cfg.n_tot = j.at("n_tot").get<std::int64_t>();
        for (const auto& js : j.at("strata")) {
            StratumSpec s;
            s.fraction = js.at("fraction").get<double>();
            s.prevalence = js.value("prevalence", 0.0);
            s.stream1_selection = js.at("stream1_selection").get<double>();
            cfg.strata.push_back(s);
        }
        cfg.sensitivity = j.at("sensitivity").get<double>();
        cfg.specificity = j.at("specificity").get<double>();
        cfg.anchor_rate = j.at("anchor_rate").get<double>();
        if (j.contains("fixed_case_counts"))
            cfg.fixed_case_counts = j.at("fixed_case_counts").get<std::vector<std::int64_t>>();
        cfg.replicates = j.value("replicates", std::int64_t{2});
        cfg.seed = j.value("seed", rng::kDefaultSeed);
        if (j.contains("estimators")) {
            cfg.estimators.clear();
            for (const auto& name : j.at("estimators"))
                cfg.estimators.push_back(estimator_from_string(name.get<std::string>()));
        }
        if (j.contains("interval_methods")) {
            cfg.interval_methods.clear();
            for (const auto& name : j.at("interval_methods"))
                cfg.interval_methods.push_back(
                    interval_method_from_string(name.get<std::string>()));
        }
        cfg.imputations = j.value("imputations", std::int64_t{200});
        if (j.contains("posterior_draws")) {
            cfg.s_outer = j.at("posterior_draws").value("s_outer", std::int64_t{100});
            cfg.t_inner = j.at("posterior_draws").value("t_inner", std::int64_t{100});
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("config invalid: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

/// A config file holds either one setting object or a study of the form
/// {"name": ..., "settings": [...]}.
inline std::vector<SimConfig> parse_sim_config(const json& j) {
    if (!j.contains("settings")) return {parse_sim_setting(j)};
    std::vector<SimConfig> settings;
    for (const auto& js : j.at("settings")) settings.push_back(parse_sim_setting(js));
    if (settings.empty()) throw InputError("config invalid: empty settings list");
    return settings;
}

inline json summary_to_json(const std::string& setting, const MonteCarloSummary& s) {
    json je = json::object();
    for (const auto& [kind, es] : s.estimators) {
        json e{{"used", es.used},
               {"excluded", es.excluded},
               {"mean_n_hat", es.mean_n_hat},
               {"empirical_sd", es.empirical_sd},
               {"avg_se", es.avg_se},
               {"bayes_excluded", es.bayes_excluded}};
        if (es.wald_coverage_pct) {
            e["wald_coverage_pct"] = *es.wald_coverage_pct;
            e["wald_mean_width"] = *es.wald_mean_width;
        }
        if (es.bayes_coverage_pct) {
            e["bayes_coverage_pct"] = *es.bayes_coverage_pct;
            e["bayes_mean_width"] = *es.bayes_mean_width;
        }
        je[to_string(kind)] = e;
    }
    return {{"setting", setting},
            {"replicates", s.replicates},
            {"true_n", s.true_n},
            {"mean_true_ppv", s.mean_true_ppv},
            {"estimators", je}};
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

inline const char* summary_csv_header() {
    return "setting,estimator,replicates,used,excluded,true_n,mean_n_hat,empirical_sd,"
           "avg_se,wald_coverage_pct,wald_mean_width,bayes_coverage_pct,bayes_mean_width,"
           "bayes_excluded,mean_true_ppv\n";
}

inline std::string summary_csv_rows(const std::string& setting, const MonteCarloSummary& s) {
    using detail::fmt_double;
    std::string out;
    for (const auto& [kind, es] : s.estimators) {
        out += setting;
        out += ',';
        out += to_string(kind);
        out += ',' + std::to_string(s.replicates) + ',' + std::to_string(es.used) + ',' +
               std::to_string(es.excluded) + ',' + std::to_string(s.true_n) + ',' +
               fmt_double(es.mean_n_hat) + ',' + fmt_double(es.empirical_sd) + ',' +
               fmt_double(es.avg_se) + ',';
        out += es.wald_coverage_pct ? fmt_double(*es.wald_coverage_pct) : "";
        out += ',';
        out += es.wald_mean_width ? fmt_double(*es.wald_mean_width) : "";
        out += ',';
        out += es.bayes_coverage_pct ? fmt_double(*es.bayes_coverage_pct) : "";
        out += ',';
        out += es.bayes_mean_width ? fmt_double(*es.bayes_mean_width) : "";
        out += ',' + std::to_string(es.bayes_excluded) + ',' + fmt_double(s.mean_true_ppv) + '\n';
    }
    return out;
}

/// FNV-1a 64-bit hash of the canonical (key-sorted) config dump; recorded in
/// the run manifest so outputs can be traced back to their exact inputs.
inline std::string config_hash(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace anchorcrc
