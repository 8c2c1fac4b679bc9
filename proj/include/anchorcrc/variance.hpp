#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "anchorcrc/errors.hpp"
#include "anchorcrc/random.hpp"
#include "anchorcrc/records.hpp"

namespace anchorcrc {

/// Rubin-style combination of m stochastic completions of the corrected
/// stream-1 case count: total = (1 + 1/m) * between + within.
struct MiVarianceResult {
    double total_variance = 0.0;
    double within = 0.0;
    double between = 0.0;
    std::int64_t m_imputations = 0;
    double n_mi = 0.0; // mean of the imputed point estimates
};

namespace detail {

/// Combines per-imputation point estimates with the (constant) anchor-side
/// within variance m01(1-psi)/psi^2.
inline MiVarianceResult combine_imputations(const std::vector<double>& points,
                                            double within) {
    const auto m = static_cast<std::int64_t>(points.size());
    double mean = 0.0;
    for (double v : points) mean += v;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double v : points) ss += (v - mean) * (v - mean);
    const double between = ss / static_cast<double>(m - 1);
    MiVarianceResult res;
    res.within = within;
    res.between = between;
    res.m_imputations = m;
    res.n_mi = mean;
    res.total_variance = (1.0 + 1.0 / static_cast<double>(m)) * between + within;
    return res;
}

inline double anchor_within_variance(std::int64_t m01, double psi) {
    return static_cast<double>(m01) * (1.0 - psi) / (psi * psi);
}

} // namespace detail

/// MI variance when the stream-1 positive predictive value is known: each
/// imputation redraws the corrected stream-1 count as Binomial(m11+m10, ppv1).
inline MiVarianceResult mi_variance_known_ppv(const CrcTable& table, double ppv1, double psi,
                                              std::int64_t m, rng::Seed seed) {
    if (m < 2) throw InputError("MI variance requires at least 2 imputations");
    if (psi <= 0.0 || psi > 1.0) throw InputError("psi must lie in (0, 1]");
    if (ppv1 < 0.0 || ppv1 > 1.0) throw InputError("ppv1 must lie in [0, 1]");

    const double anchor_term = static_cast<double>(table.m01) / psi;
    std::vector<double> points(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        auto eng = rng::make_engine(rng::derive_seed(seed, static_cast<std::uint64_t>(j),
                                                     rng::kStreamImpute));
        const std::int64_t x = rng::binomial(eng, table.stream1_total(), ppv1);
        points[static_cast<std::size_t>(j)] = static_cast<double>(x) + anchor_term;
    }
    return detail::combine_imputations(points, detail::anchor_within_variance(table.m01, psi));
}

/// MI variance when the PPV itself is estimated: each imputation first draws
/// cell probabilities from the Dirichlet(n1+1/2, n3+1/2, n5+1/2) posterior,
/// forms a PPV draw p1/(p1+p3), then proceeds as in the known-PPV case.
/// For the ML estimator, pass psi_effective = psi_star.
inline MiVarianceResult mi_variance_estimated_ppv(const CellCounts& counts, double psi_effective,
                                                  std::int64_t m, rng::Seed seed) {
    counts.validate();
    if (m < 2) throw InputError("MI variance requires at least 2 imputations");
    if (psi_effective <= 0.0 || psi_effective > 1.0)
        throw InputError("psi_effective must lie in (0, 1]");
    if (counts.n1 + counts.n3 <= 0)
        throw IdentifiabilityError("n1+n3=0", "no anchor-validated positive signals");

    const CrcTable table = derive_crc_table(counts);
    const double anchor_term = static_cast<double>(table.m01) / psi_effective;
    std::vector<double> points(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        auto eng = rng::make_engine(rng::derive_seed(seed, static_cast<std::uint64_t>(j),
                                                     rng::kStreamImpute));
        const auto p = rng::dirichlet3(eng, static_cast<double>(counts.n1) + 0.5,
                                       static_cast<double>(counts.n3) + 0.5,
                                       static_cast<double>(counts.n5) + 0.5);
        const double ppv_draw = p[0] / (p[0] + p[1]);
        const std::int64_t x = rng::binomial(eng, table.stream1_total(), ppv_draw);
        points[static_cast<std::size_t>(j)] = static_cast<double>(x) + anchor_term;
    }
    return detail::combine_imputations(points,
                                       detail::anchor_within_variance(table.m01, psi_effective));
}

/// Classic Lincoln-Petersen point estimate on misclassification-free cells.
inline double lp_point(std::int64_t n11, std::int64_t n10, std::int64_t n01) {
    if (n11 <= 0) throw IdentifiabilityError("m11=0", "Lincoln-Petersen requires overlap");
    return static_cast<double>(n11 + n10) * static_cast<double>(n11 + n01) /
           static_cast<double>(n11);
}

/// Classic Lincoln-Petersen variance (n11+n10)(n11+n01)n10*n01 / n11^3.
inline double lp_variance(std::int64_t n11, std::int64_t n10, std::int64_t n01) {
    if (n11 <= 0) throw IdentifiabilityError("m11=0", "Lincoln-Petersen requires overlap");
    const double d11 = static_cast<double>(n11);
    return static_cast<double>(n11 + n10) * static_cast<double>(n11 + n01) *
           static_cast<double>(n10) * static_cast<double>(n01) / (d11 * d11 * d11);
}

/// MI-based Lincoln-Petersen variance with the m10 cell corrected through
/// the PPV specific to that cell: each imputation draws Dirichlet posterior
/// probabilities, maps them to a PPV_10 draw, redraws the m10 count as
/// Binomial(m10, PPV_10), and evaluates the LP variance and point estimate
/// on the corrected cells. Totals combine Rubin-style.
inline double lp_variance_mi(const CellCounts& counts, std::int64_t m, rng::Seed seed) {
    counts.validate();
    if (m < 2) throw InputError("MI variance requires at least 2 imputations");
    const CrcTable table = derive_crc_table(counts);
    if (table.m11 <= 0)
        throw IdentifiabilityError("m11=0", "no overlap between streams; LP variance undefined");
    if (counts.n1 + counts.n3 <= 0)
        throw IdentifiabilityError("n1+n3=0", "no anchor-validated positive signals");

    std::vector<double> points(static_cast<std::size_t>(m));
    double within_sum = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
        auto eng = rng::make_engine(rng::derive_seed(seed, static_cast<std::uint64_t>(j),
                                                     rng::kStreamLpImpute));
        const auto p = rng::dirichlet3(eng, static_cast<double>(counts.n1) + 0.5,
                                       static_cast<double>(counts.n3) + 0.5,
                                       static_cast<double>(counts.n5) + 0.5);
        const double ppv1_draw = p[0] / (p[0] + p[1]);
        const double ratio = p[0] / (p[1] + p[2]);
        double ppv10 = (1.0 + ratio) * ppv1_draw - ratio;
        ppv10 = std::min(1.0, std::max(0.0, ppv10));
        const std::int64_t adjusted_m10 = rng::binomial(eng, table.m10, ppv10);
        within_sum += lp_variance(table.m11, adjusted_m10, table.m01);
        points[static_cast<std::size_t>(j)] = lp_point(table.m11, adjusted_m10, table.m01);
    }
    const MiVarianceResult combined = detail::combine_imputations(points, 0.0);
    return within_sum / static_cast<double>(m) +
           (1.0 + 1.0 / static_cast<double>(m)) * combined.between;
}

/// Harmonic combination of the sampling-based variance and the MI-based
/// Lincoln-Petersen variance.
inline double composite_variance_b(double var_rs, double var_lp_mi) {
    if (var_rs <= 0.0 || var_lp_mi <= 0.0)
        throw InputError("composite variance requires positive inputs");
    return 1.0 / (1.0 / var_rs + 1.0 / var_lp_mi);
}

} // namespace anchorcrc
