#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "anchorcrc/credible.hpp"
#include "anchorcrc/errors.hpp"
#include "anchorcrc/estimators.hpp"
#include "anchorcrc/random.hpp"
#include "anchorcrc/records.hpp"
#include "anchorcrc/variance.hpp"

namespace anchorcrc {

enum class IntervalMethod { Wald, Bayes };

inline const char* to_string(IntervalMethod m) {
    return m == IntervalMethod::Wald ? "wald" : "bayes";
}

inline IntervalMethod interval_method_from_string(const std::string& name) {
    if (name == "wald") return IntervalMethod::Wald;
    if (name == "bayes") return IntervalMethod::Bayes;
    throw InputError("unknown interval method: " + name + " (expected wald, bayes)");
}

/// One population stratum: its share of the registry, its disease
/// prevalence, and the probability stream 1 samples a member for testing.
struct StratumSpec {
    double fraction = 1.0;
    double prevalence = 0.0;
    double stream1_selection = 0.0;
};

/// Ground truth for one simulated surveillance setting.
struct SimConfig {
    std::string name = "setting";
    std::int64_t n_tot = 0;
    std::vector<StratumSpec> strata;
    double sensitivity = 1.0;
    double specificity = 1.0;
    double anchor_rate = 0.0;
    std::optional<std::vector<std::int64_t>> fixed_case_counts;
    std::int64_t replicates = 2;
    rng::Seed seed = rng::kDefaultSeed;
    std::vector<EstimatorKind> estimators = {EstimatorKind::Rs, EstimatorKind::Chapman,
                                             EstimatorKind::Plugin, EstimatorKind::Mle};
    std::vector<IntervalMethod> interval_methods = {IntervalMethod::Wald, IntervalMethod::Bayes};
    std::int64_t imputations = 200;
    std::int64_t s_outer = 100;
    std::int64_t t_inner = 100;

    std::vector<std::int64_t> stratum_sizes() const {
        std::vector<std::int64_t> sizes(strata.size());
        std::int64_t assigned = 0;
        for (std::size_t k = 0; k + 1 < strata.size(); ++k) {
            sizes[k] = std::llround(strata[k].fraction * static_cast<double>(n_tot));
            assigned += sizes[k];
        }
        sizes.back() = n_tot - assigned; // remainder absorbs rounding
        return sizes;
    }

    std::vector<std::int64_t> stratum_case_counts() const {
        const auto sizes = stratum_sizes();
        std::vector<std::int64_t> cases(strata.size());
        for (std::size_t k = 0; k < strata.size(); ++k) {
            cases[k] = fixed_case_counts
                           ? (*fixed_case_counts)[k]
                           : std::llround(strata[k].prevalence * static_cast<double>(sizes[k]));
        }
        return cases;
    }

    std::int64_t anchor_sample_size() const {
        return std::llround(anchor_rate * static_cast<double>(n_tot));
    }

    std::int64_t true_case_count() const {
        const auto cases = stratum_case_counts();
        return std::accumulate(cases.begin(), cases.end(), std::int64_t{0});
    }

    void validate() const {
        if (n_tot <= 0) throw InputError("config invalid: n_tot must be positive");
        if (strata.empty()) throw InputError("config invalid: at least one stratum required");
        double frac_sum = 0.0;
        for (const auto& s : strata) {
            if (s.fraction < 0.0 || s.fraction > 1.0)
                throw InputError("config invalid: stratum fraction must lie in [0, 1]");
            if (s.prevalence < 0.0 || s.prevalence > 1.0)
                throw InputError("config invalid: stratum prevalence must lie in [0, 1]");
            if (s.stream1_selection < 0.0 || s.stream1_selection > 1.0)
                throw InputError("config invalid: stream1_selection must lie in [0, 1]");
            frac_sum += s.fraction;
        }
        if (std::abs(frac_sum - 1.0) > 1e-9)
            throw InputError("config invalid: stratum fractions must sum to 1");
        for (double v : {sensitivity, specificity, anchor_rate})
            if (v < 0.0 || v > 1.0)
                throw InputError("config invalid: probabilities must lie in [0, 1]");
        const auto sizes = stratum_sizes();
        for (std::int64_t sz : sizes)
            if (sz < 0) throw InputError("config invalid: stratum size rounds below zero");
        if (fixed_case_counts) {
            if (fixed_case_counts->size() != strata.size())
                throw InputError("config invalid: fixed_case_counts must match stratum count");
            for (std::size_t k = 0; k < sizes.size(); ++k)
                if ((*fixed_case_counts)[k] < 0 || (*fixed_case_counts)[k] > sizes[k])
                    throw InputError("config invalid: fixed case count exceeds stratum size");
        }
        if (replicates < 2) throw InputError("config invalid: summary needs at least 2 replicates");
        if (imputations < 2) throw InputError("config invalid: at least 2 imputations required");
        PosteriorDrawConfig{s_outer, t_inner, seed}.validate();
        if (estimators.empty()) throw InputError("config invalid: no estimators selected");
    }
};

/// Stream-1 signal probability and true-positive share implied by the
/// configured ground truth (law of total probability over strata, with
/// realized case counts when they are fixed).
namespace detail {

struct Stream1Rates {
    double true_positive = 0.0;  // P(sampled in 1, signaled, true case)
    double false_positive = 0.0; // P(sampled in 1, signaled, non-case)
};

inline Stream1Rates stream1_rates(const SimConfig& cfg) {
    const auto sizes = cfg.stratum_sizes();
    const auto cases = cfg.stratum_case_counts();
    Stream1Rates rates;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 0) continue;
        const double w = static_cast<double>(sizes[k]) / static_cast<double>(cfg.n_tot);
        const double prev = static_cast<double>(cases[k]) / static_cast<double>(sizes[k]);
        const double sel = cfg.strata[k].stream1_selection;
        rates.true_positive += w * sel * prev * cfg.sensitivity;
        rates.false_positive += w * sel * (1.0 - prev) * (1.0 - cfg.specificity);
    }
    return rates;
}

} // namespace detail

inline double analytic_stream1_signal_rate(const SimConfig& cfg) {
    const auto rates = detail::stream1_rates(cfg);
    return rates.true_positive + rates.false_positive;
}

inline double analytic_ppv1(const SimConfig& cfg) {
    const auto rates = detail::stream1_rates(cfg);
    const double total = rates.true_positive + rates.false_positive;
    if (total <= 0.0)
        throw InputError("analytic PPV undefined: stream 1 signals no one under this config");
    return rates.true_positive / total;
}

/// One simulated dataset plus the ground truth needed for scoring.
struct GeneratedReplicate {
    std::int64_t replicate_index = 0;
    std::vector<SubjectRecord> records; // flagged or anchor-sampled subjects only
    std::int64_t true_n = 0;
    std::int64_t stream1_flagged = 0;
    std::int64_t stream1_true_positives = 0;
};

/// Draws one population and both surveillance streams. Case counts per
/// stratum are exact (placement is random, totals are not); stream 1 samples
/// subjects independently and keeps only positive signals; the anchor stream
/// is a fixed-size simple random sample scored with the true status.
/// Deterministic given (cfg.seed, replicate_index).
inline GeneratedReplicate generate_replicate(const SimConfig& cfg, std::int64_t replicate_index) {
    cfg.validate();
    const auto sizes = cfg.stratum_sizes();
    const auto case_counts = cfg.stratum_case_counts();
    const auto n_tot = static_cast<std::size_t>(cfg.n_tot);

    auto eng = rng::make_engine(rng::derive_seed(
        rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(replicate_index),
                         rng::kStreamReplicate),
        0, rng::kStreamGenerate));

    std::vector<std::uint8_t> is_case(n_tot, 0);
    std::vector<std::uint8_t> flagged(n_tot, 0);
    std::vector<std::uint8_t> anchored(n_tot, 0);
    std::vector<std::size_t> stratum_of(n_tot);

    // exact case placement, stratum by stratum
    std::size_t offset = 0;
    std::vector<std::int64_t> scratch;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const auto sz = static_cast<std::size_t>(sizes[k]);
        std::fill_n(stratum_of.begin() + static_cast<std::ptrdiff_t>(offset), sz, k);
        scratch.resize(sz);
        std::iota(scratch.begin(), scratch.end(), static_cast<std::int64_t>(offset));
        const auto picks = static_cast<std::size_t>(case_counts[k]);
        for (std::size_t i = 0; i < picks; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, sz - 1);
            std::swap(scratch[i], scratch[pick(eng)]);
            is_case[static_cast<std::size_t>(scratch[i])] = 1;
        }
        offset += sz;
    }

    GeneratedReplicate rep;
    rep.replicate_index = replicate_index;
    rep.true_n = cfg.true_case_count();

    // stream 1: independent selection, error-prone signal, positives kept
    for (std::size_t i = 0; i < n_tot; ++i) {
        const auto& stratum = cfg.strata[stratum_of[i]];
        if (!rng::bernoulli(eng, stratum.stream1_selection)) continue;
        const bool signal = is_case[i] ? rng::bernoulli(eng, cfg.sensitivity)
                                       : rng::bernoulli(eng, 1.0 - cfg.specificity);
        if (signal) {
            flagged[i] = 1;
            rep.stream1_flagged++;
            if (is_case[i]) rep.stream1_true_positives++;
        }
    }

    // anchor stream: fixed-size SRS without replacement, gold-standard result
    const auto anchor_n = static_cast<std::size_t>(cfg.anchor_sample_size());
    std::vector<std::int64_t> idx(n_tot);
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    for (std::size_t i = 0; i < anchor_n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n_tot - 1);
        std::swap(idx[i], idx[pick(eng)]);
        anchored[static_cast<std::size_t>(idx[i])] = 1;
    }

    for (std::size_t i = 0; i < n_tot; ++i) {
        if (!flagged[i] && !anchored[i]) continue; // implicit n6
        SubjectRecord rec;
        rec.subject_id = "s" + std::to_string(i);
        rec.stream1_positive = flagged[i] != 0;
        rec.stream2_sampled = anchored[i] != 0;
        if (anchored[i]) rec.stream2_positive = is_case[i] != 0;
        rep.records.push_back(std::move(rec));
    }
    return rep;
}

/// Per-estimator result within one replicate. Estimators that cannot be
/// evaluated on a degenerate table are flagged rather than aborting the
/// study; the same applies to the Bayesian interval when its adjustment
/// inputs are unavailable.
struct EstimatorResult {
    Estimate estimate;
    std::optional<CredibleInterval> bayes;
    bool identifiable = true;
    std::string failure;
    bool bayes_failed = false;
    std::string bayes_failure;
};

struct ReplicateOutcome {
    std::int64_t replicate_index = 0;
    std::int64_t true_n = 0;
    CellCounts cell_counts;
    std::int64_t stream1_flagged = 0;
    std::int64_t stream1_true_positives = 0;
    std::map<EstimatorKind, EstimatorResult> results;
};

inline ReplicateOutcome run_replicate(const GeneratedReplicate& rep, const SimConfig& cfg) {
    ReplicateOutcome out;
    out.replicate_index = rep.replicate_index;
    out.true_n = rep.true_n;
    out.stream1_flagged = rep.stream1_flagged;
    out.stream1_true_positives = rep.stream1_true_positives;
    out.cell_counts = tabulate_records(rep.records, cfg.n_tot);
    const CellCounts& counts = out.cell_counts;
    const CrcTable table = derive_crc_table(counts);

    const rng::Seed rep_seed = rng::derive_seed(
        cfg.seed, static_cast<std::uint64_t>(rep.replicate_index), rng::kStreamReplicate);
    const bool want_wald = std::find(cfg.interval_methods.begin(), cfg.interval_methods.end(),
                                     IntervalMethod::Wald) != cfg.interval_methods.end();
    const bool want_bayes = std::find(cfg.interval_methods.begin(), cfg.interval_methods.end(),
                                      IntervalMethod::Bayes) != cfg.interval_methods.end();

    for (EstimatorKind kind : cfg.estimators) {
        EstimatorResult res;
        try {
            switch (kind) {
                case EstimatorKind::Rs:
                    res.estimate =
                        estimate_rs(counts.anchor_positives(), counts.anchor_sample_size(),
                                    counts.n_tot);
                    break;
                case EstimatorKind::Chapman:
                    res.estimate =
                        estimate_chapman(table.m11, table.stream1_total(), table.anchor_total());
                    break;
                case EstimatorKind::Plugin:
                    res.estimate = estimate_plugin(table, analytic_ppv1(cfg), cfg.anchor_rate,
                                                   cfg.imputations, rng::derive_seed(rep_seed, 2));
                    break;
                case EstimatorKind::Mle: {
                    res.estimate =
                        estimate_mle(counts, cfg.imputations, rng::derive_seed(rep_seed, 1));
                    if (want_bayes) {
                        PosteriorDrawConfig draw_cfg{cfg.s_outer, cfg.t_inner,
                                                     rng::derive_seed(rep_seed, 3)};
                        const auto draws = posterior_case_count_draws(counts, draw_cfg);
                        if (choose_interval(res.estimate.n_hat, counts.n_tot) ==
                            IntervalKind::Unadjusted) {
                            res.bayes = interval_unadjusted(draws);
                        } else {
                            try {
                                const Estimate rs =
                                    estimate_rs(counts.anchor_positives(),
                                                counts.anchor_sample_size(), counts.n_tot);
                                const double var_rs = (*rs.se) * (*rs.se);
                                const double var_lp = lp_variance_mi(counts, cfg.imputations,
                                                                     rng::derive_seed(rep_seed, 4));
                                const double var_mi = (*res.estimate.se) * (*res.estimate.se);
                                res.bayes = interval_adjusted(
                                    draws, res.estimate.n_hat, var_mi,
                                    composite_variance_b(var_rs, var_lp), *rs.wald());
                            } catch (const std::exception& e) {
                                res.bayes_failed = true;
                                res.bayes_failure = e.what();
                            }
                        }
                    }
                    break;
                }
                case EstimatorKind::AnchorExact:
                    res.estimate = estimate_anchor_exact(table, cfg.anchor_rate);
                    break;
            }
        } catch (const IdentifiabilityError& e) {
            res.identifiable = false;
            res.failure = e.what();
        } catch (const InputError& e) {
            res.identifiable = false;
            res.failure = e.what();
        }
        if (!want_wald) {
            res.estimate.ci_lower.reset();
            res.estimate.ci_upper.reset();
        }
        out.results.emplace(kind, std::move(res));
    }
    return out;
}

struct EstimatorSummary {
    std::int64_t used = 0;
    std::int64_t excluded = 0;
    double mean_n_hat = 0.0;
    double empirical_sd = 0.0;
    double avg_se = 0.0;
    std::optional<double> wald_coverage_pct;
    std::optional<double> wald_mean_width;
    std::optional<double> bayes_coverage_pct;
    std::optional<double> bayes_mean_width;
    std::int64_t bayes_excluded = 0;
};

struct MonteCarloSummary {
    std::int64_t replicates = 0;
    std::int64_t true_n = 0;
    double mean_true_ppv = 0.0; // mean stream-1 true-positive share
    std::map<EstimatorKind, EstimatorSummary> estimators;
};

/// Aggregates replicate outcomes into the usual performance table: mean
/// estimate, empirical SD, average SE, interval coverage and width.
/// Non-identifiable replicates are excluded per estimator and counted.
inline MonteCarloSummary monte_carlo_summary(std::span<const ReplicateOutcome> outcomes) {
    if (outcomes.size() < 2) throw InputError("summary needs at least 2 replicate outcomes");
    MonteCarloSummary summary;
    summary.replicates = static_cast<std::int64_t>(outcomes.size());
    summary.true_n = outcomes.front().true_n;

    double ppv_sum = 0.0;
    std::int64_t ppv_n = 0;
    for (const auto& o : outcomes) {
        if (o.true_n != summary.true_n)
            throw InternalError("true case count varies across replicates");
        if (o.stream1_flagged > 0) {
            ppv_sum += static_cast<double>(o.stream1_true_positives) /
                       static_cast<double>(o.stream1_flagged);
            ppv_n++;
        }
    }
    summary.mean_true_ppv = ppv_n > 0 ? ppv_sum / static_cast<double>(ppv_n) : 0.0;

    std::vector<EstimatorKind> kinds;
    for (const auto& [kind, res] : outcomes.front().results) kinds.push_back(kind);

    for (EstimatorKind kind : kinds) {
        EstimatorSummary es;
        std::vector<double> n_hats;
        double se_sum = 0.0;
        std::int64_t se_n = 0;
        std::int64_t wald_cov = 0, wald_n = 0;
        double wald_width = 0.0;
        std::int64_t bayes_cov = 0, bayes_n = 0;
        double bayes_width = 0.0;

        for (const auto& o : outcomes) {
            const auto it = o.results.find(kind);
            if (it == o.results.end() || !it->second.identifiable) {
                es.excluded++;
                continue;
            }
            const EstimatorResult& r = it->second;
            n_hats.push_back(r.estimate.n_hat);
            if (r.estimate.se) {
                se_sum += *r.estimate.se;
                se_n++;
            }
            if (auto w = r.estimate.wald()) {
                wald_n++;
                wald_width += w->width();
                if (w->contains(static_cast<double>(o.true_n))) wald_cov++;
            }
            if (r.bayes) {
                bayes_n++;
                bayes_width += r.bayes->width();
                if (r.bayes->contains(static_cast<double>(o.true_n))) bayes_cov++;
            } else if (r.bayes_failed) {
                es.bayes_excluded++;
            }
        }
        if (n_hats.empty())
            throw IdentifiabilityError(std::string("estimator ") + to_string(kind),
                                       "non-identifiable in every replicate");
        es.used = static_cast<std::int64_t>(n_hats.size());
        double mean = 0.0;
        for (double v : n_hats) mean += v;
        mean /= static_cast<double>(n_hats.size());
        es.mean_n_hat = mean;
        double ss = 0.0;
        for (double v : n_hats) ss += (v - mean) * (v - mean);
        es.empirical_sd = n_hats.size() > 1
                              ? std::sqrt(ss / static_cast<double>(n_hats.size() - 1))
                              : 0.0;
        es.avg_se = se_n > 0 ? se_sum / static_cast<double>(se_n) : 0.0;
        if (wald_n > 0) {
            es.wald_coverage_pct = 100.0 * static_cast<double>(wald_cov) /
                                   static_cast<double>(wald_n);
            es.wald_mean_width = wald_width / static_cast<double>(wald_n);
        }
        if (bayes_n > 0) {
            es.bayes_coverage_pct = 100.0 * static_cast<double>(bayes_cov) /
                                    static_cast<double>(bayes_n);
            es.bayes_mean_width = bayes_width / static_cast<double>(bayes_n);
        }
        summary.estimators.emplace(kind, es);
    }
    return summary;
}

namespace detail {

/// Index-parallel loop with deterministic output: fn(i) writes only to
/// slot i, so the schedule cannot affect results.
template <typename Fn>
void parallel_for(std::int64_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(n));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace detail

/// Runs every replicate of one setting and aggregates. Replicates are
/// independent units with derived seeds; thread count never changes output.
inline MonteCarloSummary run_simulation(const SimConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(cfg.replicates));
    detail::parallel_for(cfg.replicates, threads, [&](std::int64_t i) {
        outcomes[static_cast<std::size_t>(i)] = run_replicate(generate_replicate(cfg, i), cfg);
    });
    return monte_carlo_summary(outcomes);
}

} // namespace anchorcrc
