#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "anchorcrc/errors.hpp"
#include "anchorcrc/records.hpp"
#include "anchorcrc/variance.hpp"

namespace anchorcrc {

inline constexpr double kZ95 = 1.96;

enum class EstimatorKind { Rs, Chapman, Plugin, Mle, AnchorExact };

inline const char* to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Rs: return "rs";
        case EstimatorKind::Chapman: return "chapman";
        case EstimatorKind::Plugin: return "plugin";
        case EstimatorKind::Mle: return "mle";
        case EstimatorKind::AnchorExact: return "anchor";
    }
    throw InternalError("unknown estimator kind");
}

inline EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "rs") return EstimatorKind::Rs;
    if (name == "chapman") return EstimatorKind::Chapman;
    if (name == "plugin") return EstimatorKind::Plugin;
    if (name == "mle") return EstimatorKind::Mle;
    if (name == "anchor") return EstimatorKind::AnchorExact;
    throw InputError("unknown estimator: " + name + " (expected rs, chapman, plugin, mle, anchor)");
}

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double width() const { return upper - lower; }
    bool contains(double x) const { return lower <= x && x <= upper; }
};

/// A point estimate of the case count with optional standard error and
/// Wald-type confidence limits. Estimates stay real-valued; callers decide
/// how to round for presentation.
struct Estimate {
    double n_hat = 0.0;
    std::optional<double> se;
    std::optional<double> ci_lower;
    std::optional<double> ci_upper;
    EstimatorKind method = EstimatorKind::Rs;

    std::optional<Interval> wald() const {
        if (!ci_lower || !ci_upper) return std::nullopt;
        return Interval{*ci_lower, *ci_upper};
    }
};

/// Identifiable parameter MLEs of the collapsed six-cell multinomial model.
struct MleParameters {
    double psi_hat = 0.0;      // anchor sampling rate
    double psi_star_hat = 0.0; // anchor rate among subjects not signaled in stream 1
    double theta_hat = 0.0;    // P(signaled in stream 1)
    double pi_hat = 0.0;       // P(true case or false negative mixture term)
    double ppv1_hat = 0.0;     // P(true case | signaled in stream 1)
};

namespace detail {

inline Estimate with_wald(double n_hat, double variance, EstimatorKind kind) {
    Estimate est;
    est.n_hat = n_hat;
    est.method = kind;
    const double se = std::sqrt(variance);
    est.se = se;
    est.ci_lower = n_hat - kZ95 * se;
    est.ci_upper = n_hat + kZ95 * se;
    return est;
}

} // namespace detail

/// Sampling-based estimator from the anchor stream alone, with the finite
/// population correction folded into the variance.
inline Estimate estimate_rs(std::int64_t n_pos, std::int64_t n, std::int64_t n_tot) {
    if (n_pos < 0 || n_pos > n) throw InputError("n_pos must lie in [0, n]");
    if (n > n_tot) throw InputError("anchor sample size exceeds n_tot");
    if (n < 2) throw InputError("anchor sample size must be at least 2 for the variance");
    const double nn = static_cast<double>(n);
    const double ntot = static_cast<double>(n_tot);
    const double p = static_cast<double>(n_pos) / nn;
    const double fpc = nn * (ntot - nn) / (ntot * (nn - 1.0));
    const double var_p = fpc * p * (1.0 - p) / nn;
    return detail::with_wald(ntot * p, ntot * ntot * var_p, EstimatorKind::Rs);
}

/// Original anchor-stream estimator assuming misclassification-free cells:
/// N = m11 + m10 + m01/psi.
inline Estimate estimate_anchor_exact(const CrcTable& table, double psi) {
    if (psi <= 0.0 || psi > 1.0) throw InputError("psi must lie in (0, 1]");
    const double n_hat = static_cast<double>(table.m11 + table.m10) +
                         static_cast<double>(table.m01) / psi;
    const double var = static_cast<double>(table.m01) * (1.0 - psi) / (psi * psi);
    return detail::with_wald(n_hat, var, EstimatorKind::AnchorExact);
}

/// Classical Chapman point and variance estimators. Defined for all inputs
/// with m11 <= min(m1dot, mdot1), including m11 = 0.
inline Estimate estimate_chapman(std::int64_t m11, std::int64_t m1dot, std::int64_t mdot1) {
    if (m11 > m1dot || m11 > mdot1 || m11 < 0)
        throw InputError("require 0 <= m11 <= min(m1dot, mdot1)");
    const double a = static_cast<double>(m1dot) + 1.0;
    const double b = static_cast<double>(mdot1) + 1.0;
    const double c = static_cast<double>(m11) + 1.0;
    const double n_hat = a * b / c - 1.0;
    const double var = a * b * static_cast<double>(m1dot - m11) *
                       static_cast<double>(mdot1 - m11) / (c * c * (c + 1.0));
    return detail::with_wald(n_hat, var, EstimatorKind::Chapman);
}

/// Log-transform interval for the Chapman estimator, anchored at the number
/// of distinct observed cases. Used as the reported interval because the
/// transformed-logit variant from the CRC literature is not reimplemented
/// here; falls back to plain Wald limits when no cases are unobserved.
inline Interval chapman_fallback_interval(const Estimate& est, std::int64_t m11,
                                          std::int64_t m1dot, std::int64_t mdot1) {
    const double observed = static_cast<double>(m1dot + mdot1 - m11);
    const double f0 = est.n_hat - observed;
    const double var = est.se ? (*est.se) * (*est.se) : 0.0;
    if (f0 <= 0.0 || var <= 0.0) {
        return {est.n_hat - kZ95 * std::sqrt(var), est.n_hat + kZ95 * std::sqrt(var)};
    }
    const double c = std::exp(kZ95 * std::sqrt(std::log(1.0 + var / (f0 * f0))));
    return {observed + f0 / c, observed + f0 * c};
}

/// Misclassification-corrected plug-in estimator with a known PPV:
/// N = ppv1*(m11 + m10) + m01/psi. Point estimate only; see the overload
/// below for an MI standard error.
inline Estimate estimate_plugin(const CrcTable& table, double ppv1, double psi) {
    if (psi <= 0.0 || psi > 1.0) throw InputError("psi must lie in (0, 1]");
    if (ppv1 < 0.0 || ppv1 > 1.0) throw InputError("ppv1 must lie in [0, 1]");
    Estimate est;
    est.n_hat = ppv1 * static_cast<double>(table.stream1_total()) +
                static_cast<double>(table.m01) / psi;
    est.method = EstimatorKind::Plugin;
    return est;
}

inline Estimate estimate_plugin(const CrcTable& table, double ppv1, double psi,
                                std::int64_t imputations, rng::Seed seed) {
    Estimate est = estimate_plugin(table, ppv1, psi);
    const MiVarianceResult mi = mi_variance_known_ppv(table, ppv1, psi, imputations, seed);
    est.se = std::sqrt(mi.total_variance);
    est.ci_lower = est.n_hat - kZ95 * *est.se;
    est.ci_upper = est.n_hat + kZ95 * *est.se;
    return est;
}

inline MleParameters mle_parameters(const CellCounts& counts) {
    counts.validate();
    if (counts.n1 + counts.n3 <= 0)
        throw IdentifiabilityError("n1+n3=0", "no anchor-validated positive signals; PPV undefined");
    if (counts.n2 + counts.n4 <= 0)
        throw IdentifiabilityError("n2+n4=0", "no anchor draws outside stream-1 signals; pi undefined");
    const double ntot = static_cast<double>(counts.n_tot);
    MleParameters p;
    p.psi_hat = static_cast<double>(counts.anchor_sample_size()) / ntot;
    p.theta_hat = static_cast<double>(counts.stream1_positives()) / ntot;
    p.pi_hat = (static_cast<double>(counts.stream1_positives()) +
                static_cast<double>(counts.n2) / static_cast<double>(counts.n2 + counts.n4) *
                    static_cast<double>(counts.n2 + counts.n4 + counts.n6)) /
               ntot;
    p.ppv1_hat = static_cast<double>(counts.n1) / static_cast<double>(counts.n1 + counts.n3);
    p.psi_star_hat = static_cast<double>(counts.n2 + counts.n4) /
                     static_cast<double>(counts.n2 + counts.n4 + counts.n6);
    const double prevalence = p.ppv1_hat * p.theta_hat + p.pi_hat - p.theta_hat;
    if (prevalence < -1e-12 || prevalence > 1.0 + 1e-12)
        throw InternalError("estimated prevalence outside [0, 1]");
    return p;
}

/// Closed-form ML estimator of the case count on the collapsed table:
/// N = ppv1_hat*(m11 + m10) + m01/psi_star_hat. Cross-checked internally
/// against the algebraically equivalent N_tot * estimated-prevalence form.
inline Estimate estimate_mle(const CellCounts& counts) {
    const MleParameters p = mle_parameters(counts);
    const CrcTable table = derive_crc_table(counts);
    Estimate est;
    est.n_hat = p.ppv1_hat * static_cast<double>(table.stream1_total()) +
                static_cast<double>(table.m01) / p.psi_star_hat;
    est.method = EstimatorKind::Mle;

    const double via_prevalence =
        static_cast<double>(counts.n_tot) * (p.ppv1_hat * p.theta_hat + p.pi_hat - p.theta_hat);
    const double scale = std::max({std::abs(est.n_hat), std::abs(via_prevalence), 1.0});
    if (std::abs(est.n_hat - via_prevalence) > 1e-9 * scale)
        throw InternalError("ML estimator identity violated between cell and prevalence forms");
    return est;
}

inline Estimate estimate_mle(const CellCounts& counts, std::int64_t imputations, rng::Seed seed) {
    Estimate est = estimate_mle(counts);
    const MleParameters p = mle_parameters(counts);
    const MiVarianceResult mi =
        mi_variance_estimated_ppv(counts, p.psi_star_hat, imputations, seed);
    est.se = std::sqrt(mi.total_variance);
    est.ci_lower = est.n_hat - kZ95 * *est.se;
    est.ci_upper = est.n_hat + kZ95 * *est.se;
    return est;
}

/// The six collapsed-table cell probabilities under the identifiable
/// reparameterization. They sum to one for any valid parameter vector.
inline std::array<double, 6> reparameterized_cell_probs(double psi, double theta, double pi,
                                                        double ppv1) {
    for (double v : {psi, theta, pi, ppv1})
        if (v < 0.0 || v > 1.0) throw InputError("parameters must lie in [0, 1]");
    if (theta > pi) throw InputError("theta must not exceed pi");
    return {psi * ppv1 * theta,         psi * (pi - theta), psi * (1.0 - ppv1) * theta,
            psi * (1.0 - pi),           (1.0 - psi) * theta, (1.0 - psi) * (1.0 - theta)};
}

} // namespace anchorcrc
