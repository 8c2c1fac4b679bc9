#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "anchorcrc/errors.hpp"
#include "anchorcrc/estimators.hpp"
#include "anchorcrc/random.hpp"
#include "anchorcrc/records.hpp"

namespace anchorcrc {

/// Sizing of the two-level posterior simulation: s_outer PPV-level draws,
/// each expanded by t_inner cell-level draws.
struct PosteriorDrawConfig {
    std::int64_t s_outer = 100;
    std::int64_t t_inner = 100;
    rng::Seed rng_seed = rng::kDefaultSeed;

    std::int64_t total_draws() const { return s_outer * t_inner; }

    void validate() const {
        if (s_outer < 1 || t_inner < 1)
            throw InputError("posterior draw counts must be positive");
        if (s_outer > 100'000'000 / std::max<std::int64_t>(t_inner, 1))
            throw InputError("posterior draw budget exceeds 1e8");
    }
};

enum class IntervalKind { Unadjusted, Adjusted };

inline const char* to_string(IntervalKind kind) {
    return kind == IntervalKind::Unadjusted ? "unadjusted" : "adjusted";
}

struct CredibleInterval {
    double lower = 0.0;
    double upper = 0.0;
    IntervalKind kind = IntervalKind::Unadjusted;
    std::int64_t draws_used = 0;
    std::optional<double> scale_a; // present iff kind == Adjusted
    std::optional<double> shift_b;

    double width() const { return upper - lower; }
    bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Linear-interpolation quantile between order statistics (the R type-7
/// rule), on an already sorted range.
inline double quantile_of_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw InputError("quantile of empty range");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Maps the stream-1 PPV to the PPV of signals not confirmed by the anchor
/// sample: PPV10 = (1 + r) * PPV1 - r with r = p1/(p3 + p5). The unclamped
/// value can drop below zero for small PPV1 draws, so the result is clamped
/// to [0, 1] to stay usable as a count scale.
inline double ppv10_from_probs(double ppv1, double p1, double p3, double p5) {
    if (p1 < 0.0 || p3 < 0.0 || p5 < 0.0) throw InputError("weights must be nonnegative");
    if (ppv1 < 0.0 || ppv1 > 1.0) throw InputError("ppv1 must lie in [0, 1]");
    if (p3 + p5 <= 0.0) throw InputError("p3+p5 must be positive");
    const double r = p1 / (p3 + p5);
    const double value = (1.0 + r) * ppv1 - r;
    return std::min(1.0, std::max(0.0, value));
}

/// Two-level Dirichlet posterior simulation of the case count.
///
/// Outer level: Dirichlet(n1+1/2, n3+1/2, n5+1/2) draws quantify PPV
/// uncertainty and shrink the m10 cell to its expected true-positive size.
/// Inner level: Dirichlet(m11+1/2, m10*+1/2, m01+1/2) draws express cell
/// composition uncertainty; the capture total is then regenerated
/// binomially so posterior spread is not conditioned on the observed total.
/// Each outer unit carries an independent derived seed, so outer units can
/// run in any order (or in parallel) with identical output.
inline std::vector<double> posterior_case_count_draws(const CellCounts& counts,
                                                      const PosteriorDrawConfig& cfg) {
    counts.validate();
    cfg.validate();
    if (counts.n1 + counts.n3 <= 0)
        throw IdentifiabilityError("n1+n3=0", "no anchor-validated positive signals");
    if (counts.n2 + counts.n4 <= 0)
        throw IdentifiabilityError("n2+n4=0", "no anchor draws outside stream-1 signals");

    const CrcTable table = derive_crc_table(counts);
    const double psi_star = static_cast<double>(counts.n2 + counts.n4) /
                            static_cast<double>(counts.n2 + counts.n4 + counts.n6);
    const double m11 = static_cast<double>(table.m11);
    const double m10 = static_cast<double>(table.m10);
    const double m01 = static_cast<double>(table.m01);

    std::vector<double> draws(static_cast<std::size_t>(cfg.total_draws()));
    for (std::int64_t s = 0; s < cfg.s_outer; ++s) {
        auto eng = rng::make_engine(rng::derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(s),
                                                     rng::kStreamPosterior));
        const auto p = rng::dirichlet3(eng, static_cast<double>(counts.n1) + 0.5,
                                       static_cast<double>(counts.n3) + 0.5,
                                       static_cast<double>(counts.n5) + 0.5);
        const double ppv1_draw = p[0] / (p[0] + p[1]);
        const double ppv10_draw = ppv10_from_probs(ppv1_draw, p[0], p[1], p[2]);
        const double m10_star = m10 * ppv10_draw;
        const double m_c = m11 + m10_star + m01;

        for (std::int64_t t = 0; t < cfg.t_inner; ++t) {
            const auto q = rng::dirichlet3(eng, m11 + 0.5, m10_star + 0.5, m01 + 0.5);
            const double q1 = q[0] + q[1];
            const double p1_uncond = psi_star * q1 / (psi_star * q1 + q[2]);
            const double p01_uncond = psi_star * (1.0 - p1_uncond);
            const double p_capture = p1_uncond + p01_uncond;
            const double n_given_mc = m_c / p_capture;
            const auto trials = static_cast<std::int64_t>(std::floor(n_given_mc + 0.5));
            const std::int64_t captured = rng::binomial(eng, trials, p_capture);
            // Split the regenerated capture total by the capture-conditional
            // cell shares; N then recomposes as m11 + m10 + m01/psi_star.
            const double n_star = static_cast<double>(captured) / p_capture;
            draws[static_cast<std::size_t>(s * cfg.t_inner + t)] = n_star;
        }
    }
    return draws;
}

/// Percentile interval from the raw posterior draws.
inline CredibleInterval interval_unadjusted(std::span<const double> draws) {
    if (draws.size() < 2) throw InputError("interval requires at least 2 draws");
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    CredibleInterval ci;
    ci.lower = quantile_of_sorted(sorted, 0.025);
    ci.upper = quantile_of_sorted(sorted, 0.975);
    ci.kind = IntervalKind::Unadjusted;
    ci.draws_used = static_cast<std::int64_t>(draws.size());
    return ci;
}

/// Scale-and-shift interval for high-prevalence settings. Draws are mapped
/// through a*x + b with a^2 the ratio of the composite variance to the MI
/// variance and b centering the map at the point estimate; the percentile
/// limits are then tempered against the sampling-based Wald limits.
inline CredibleInterval interval_adjusted(std::span<const double> draws, double n_hat,
                                          double var_mi, double var_comp_b, Interval rs_wald) {
    if (draws.size() < 2) throw InputError("interval requires at least 2 draws");
    if (var_mi <= 0.0 || var_comp_b <= 0.0)
        throw InputError("adjusted interval requires positive variances");

    const double a = std::sqrt(var_comp_b / var_mi);
    const double b = n_hat * (1.0 - a);
    std::vector<double> mapped(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) mapped[i] = a * draws[i] + b;
    std::sort(mapped.begin(), mapped.end());

    const double ll_ab = quantile_of_sorted(mapped, 0.025);
    const double ul_ab = quantile_of_sorted(mapped, 0.975);
    CredibleInterval ci;
    ci.lower = std::max(ll_ab, 0.5 * (ll_ab + rs_wald.lower));
    ci.upper = std::min(ul_ab, 0.5 * (ul_ab + rs_wald.upper));
    ci.kind = IntervalKind::Adjusted;
    ci.draws_used = static_cast<std::int64_t>(draws.size());
    ci.scale_a = a;
    ci.shift_b = b;
    return ci;
}

/// Interval recommendation: the unadjusted percentile interval below 20%
/// estimated prevalence, the scale-and-shift interval at or above it.
inline IntervalKind choose_interval(double n_hat, std::int64_t n_tot) {
    if (n_tot <= 0) throw InputError("n_tot must be positive");
    return n_hat / static_cast<double>(n_tot) < 0.20 ? IntervalKind::Unadjusted
                                                     : IntervalKind::Adjusted;
}

} // namespace anchorcrc
