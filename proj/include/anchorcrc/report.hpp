#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorcrc/config.hpp"
#include "anchorcrc/credible.hpp"
#include "anchorcrc/estimators.hpp"
#include "anchorcrc/records.hpp"
#include "anchorcrc/variance.hpp"
#include "anchorcrc/version.hpp"

namespace anchorcrc {

struct EstimateOptions {
    std::vector<EstimatorKind> methods = {EstimatorKind::Mle, EstimatorKind::Rs,
                                          EstimatorKind::Chapman};
    std::optional<double> ppv; // required by the plug-in estimator
    std::optional<double> psi; // plug-in sampling probability; defaults to n/n_tot
    std::int64_t imputations = 200;
    std::int64_t s_outer = 100;
    std::int64_t t_inner = 100;
    rng::Seed seed = rng::kDefaultSeed;
};

namespace detail {

inline json interval_json(const char* kind, double lower, double upper) {
    return {{"kind", kind}, {"lower", lower}, {"upper", upper}};
}

inline json estimate_json(const Estimate& est) {
    json j{{"method", to_string(est.method)}, {"n_hat", est.n_hat}};
    if (est.se) j["se"] = *est.se;
    if (est.ci_lower && est.ci_upper)
        j["interval"] = interval_json("wald", *est.ci_lower, *est.ci_upper);
    return j;
}

} // namespace detail

/// Assembles the canonical estimation report. Deterministic: the same
/// counts, options and seed always produce an identical JSON document
/// (keys are emitted in sorted order, timing is never embedded).
inline json build_estimate_report(const CellCounts& counts, const EstimateOptions& opts) {
    counts.validate();
    const CrcTable table = derive_crc_table(counts);

    json report{{"tool", "anchorcrc"},
                {"version", kVersion},
                {"seed", opts.seed},
                {"inputs",
                 {{"counts", counts_to_json(counts)},
                  {"derived",
                   {{"m11", table.m11},
                    {"m10", table.m10},
                    {"m01", table.m01},
                    {"anchor_sample_size", counts.anchor_sample_size()},
                    {"anchor_positives", counts.anchor_positives()}}}}}};

    json estimates = json::object();
    for (EstimatorKind kind : opts.methods) {
        switch (kind) {
            case EstimatorKind::Rs: {
                estimates["rs"] = detail::estimate_json(estimate_rs(
                    counts.anchor_positives(), counts.anchor_sample_size(), counts.n_tot));
                break;
            }
            case EstimatorKind::Chapman: {
                const Estimate est =
                    estimate_chapman(table.m11, table.stream1_total(), table.anchor_total());
                json j{{"method", "chapman"}, {"n_hat", est.n_hat}, {"se", *est.se}};
                const Interval fallback = chapman_fallback_interval(
                    est, table.m11, table.stream1_total(), table.anchor_total());
                // the transformed-logit interval from the CRC literature is
                // not implemented; a log-transform interval stands in
                j["interval"] = detail::interval_json("log_fallback", fallback.lower,
                                                      fallback.upper);
                estimates["chapman"] = j;
                break;
            }
            case EstimatorKind::Plugin: {
                if (!opts.ppv)
                    throw InputError("plugin estimator requires --ppv");
                const double psi = opts.psi.value_or(
                    static_cast<double>(counts.anchor_sample_size()) /
                    static_cast<double>(counts.n_tot));
                json j = detail::estimate_json(estimate_plugin(
                    table, *opts.ppv, psi, opts.imputations, rng::derive_seed(opts.seed, 2)));
                j["ppv"] = *opts.ppv;
                j["psi"] = psi;
                j["imputations"] = opts.imputations;
                estimates["plugin"] = j;
                break;
            }
            case EstimatorKind::Mle: {
                const MleParameters params = mle_parameters(counts);
                const Estimate est =
                    estimate_mle(counts, opts.imputations, rng::derive_seed(opts.seed, 1));
                json j = detail::estimate_json(est);
                j["imputations"] = opts.imputations;

                json jp{{"psi_hat", params.psi_hat},
                        {"psi_star_hat", params.psi_star_hat},
                        {"theta_hat", params.theta_hat},
                        {"pi_hat", params.pi_hat},
                        {"ppv1_hat", params.ppv1_hat}};
                if (counts.n3 + counts.n5 > 0)
                    jp["ppv10_hat"] = ppv10_from_probs(
                        params.ppv1_hat, static_cast<double>(counts.n1),
                        static_cast<double>(counts.n3), static_cast<double>(counts.n5));
                j["parameters"] = jp;

                const PosteriorDrawConfig draw_cfg{opts.s_outer, opts.t_inner,
                                                   rng::derive_seed(opts.seed, 3)};
                const auto draws = posterior_case_count_draws(counts, draw_cfg);
                CredibleInterval ci;
                if (choose_interval(est.n_hat, counts.n_tot) == IntervalKind::Unadjusted) {
                    ci = interval_unadjusted(draws);
                } else {
                    const Estimate rs = estimate_rs(counts.anchor_positives(),
                                                    counts.anchor_sample_size(), counts.n_tot);
                    const double var_lp =
                        lp_variance_mi(counts, opts.imputations, rng::derive_seed(opts.seed, 4));
                    ci = interval_adjusted(
                        draws, est.n_hat, (*est.se) * (*est.se),
                        composite_variance_b((*rs.se) * (*rs.se), var_lp), *rs.wald());
                }
                json jc{{"kind", to_string(ci.kind)},
                        {"lower", ci.lower},
                        {"upper", ci.upper},
                        {"draws_used", ci.draws_used}};
                if (ci.scale_a) jc["scale_a"] = *ci.scale_a;
                if (ci.shift_b) jc["shift_b"] = *ci.shift_b;
                j["credible"] = jc;
                estimates["mle"] = j;
                break;
            }
            case EstimatorKind::AnchorExact: {
                const double psi = opts.psi.value_or(
                    static_cast<double>(counts.anchor_sample_size()) /
                    static_cast<double>(counts.n_tot));
                json j = detail::estimate_json(estimate_anchor_exact(table, psi));
                j["psi"] = psi;
                estimates["anchor"] = j;
                break;
            }
        }
    }
    report["estimates"] = estimates;
    return report;
}

/// Flat CSV projection of the JSON report, one row per method.
inline std::string estimate_report_csv(const json& report) {
    using detail_cfg = json;
    std::string out = "method,n_hat,se,interval_kind,interval_lower,interval_upper,"
                      "credible_kind,credible_lower,credible_upper\n";
    const auto& estimates = report.at("estimates");
    for (auto it = estimates.begin(); it != estimates.end(); ++it) {
        const detail_cfg& e = it.value();
        out += it.key();
        out += ',' + detail::fmt_double(e.at("n_hat").get<double>());
        out += ',';
        if (e.contains("se")) out += detail::fmt_double(e.at("se").get<double>());
        if (e.contains("interval")) {
            out += ',' + e.at("interval").at("kind").get<std::string>();
            out += ',' + detail::fmt_double(e.at("interval").at("lower").get<double>());
            out += ',' + detail::fmt_double(e.at("interval").at("upper").get<double>());
        } else {
            out += ",,,";
        }
        if (e.contains("credible")) {
            out += ',' + e.at("credible").at("kind").get<std::string>();
            out += ',' + detail::fmt_double(e.at("credible").at("lower").get<double>());
            out += ',' + detail::fmt_double(e.at("credible").at("upper").get<double>());
        } else {
            out += ",,,";
        }
        out += '\n';
    }
    return out;
}

} // namespace anchorcrc
