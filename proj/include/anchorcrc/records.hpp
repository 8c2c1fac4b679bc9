#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "anchorcrc/errors.hpp"

namespace anchorcrc {

/// One registry member's capture profile across the two streams.
///
/// Stream 1 is the existing surveillance effort: only positive signals are
/// documented, so a false value means "negative or never sampled". Stream 2
/// is the gold-standard random sample; its result exists exactly when the
/// subject was drawn into it.
struct SubjectRecord {
    std::string subject_id;
    bool stream1_positive = false;
    bool stream2_sampled = false;
    std::optional<bool> stream2_positive;
};

/// Capture profile when several non-anchor streams run in parallel. One
/// boolean per non-anchor stream, in configured stream order.
struct MultiStreamRecord {
    std::string subject_id;
    std::vector<bool> stream_signals;
    bool stream2_sampled = false;
    std::optional<bool> stream2_positive;
};

/// The six collapsed observation-type counts plus the registry size.
///
///   n1: sampled in 2, test+ in 2, signaled in 1
///   n2: sampled in 2, test+ in 2, not signaled in 1
///   n3: sampled in 2, test- in 2, signaled in 1
///   n4: sampled in 2, test- in 2, not signaled in 1
///   n5: not sampled in 2, signaled in 1
///   n6: not sampled in 2, not signaled in 1
struct CellCounts {
    std::int64_t n1 = 0, n2 = 0, n3 = 0, n4 = 0, n5 = 0, n6 = 0;
    std::int64_t n_tot = 0;

    std::int64_t anchor_sample_size() const { return n1 + n2 + n3 + n4; }
    std::int64_t anchor_positives() const { return n1 + n2; }
    std::int64_t stream1_positives() const { return n1 + n3 + n5; }

    void validate() const {
        for (std::int64_t v : {n1, n2, n3, n4, n5, n6})
            if (v < 0) throw InputError("cell counts must be nonnegative");
        if (n_tot <= 0) throw InputError("n_tot must be positive");
        if (n1 + n2 + n3 + n4 + n5 + n6 != n_tot)
            throw InputError("cell counts n1..n6 must sum to n_tot");
    }
};

/// Observed two-stream capture-recapture cells. m11 = found by both,
/// m10 = stream 1 only, m01 = anchor only.
struct CrcTable {
    std::int64_t m11 = 0, m10 = 0, m01 = 0;

    std::int64_t stream1_total() const { return m11 + m10; }
    std::int64_t anchor_total() const { return m11 + m01; }
};

/// Classifies per-subject records into the six collapsed cells. Subjects
/// absent from `records` are implicit members of n6 (registry extracts only
/// list signaled or sampled subjects).
inline CellCounts tabulate_records(std::span<const SubjectRecord> records, std::int64_t n_tot) {
    if (n_tot <= 0) throw InputError("n_tot must be positive");
    if (static_cast<std::int64_t>(records.size()) > n_tot)
        throw InputError("record count exceeds n_tot");

    std::unordered_set<std::string_view> seen;
    seen.reserve(records.size());

    CellCounts counts;
    counts.n_tot = n_tot;
    for (const auto& rec : records) {
        if (!seen.insert(rec.subject_id).second)
            throw InputError("duplicate subject_id: " + rec.subject_id);
        if (rec.stream2_positive.has_value() != rec.stream2_sampled)
            throw InputError("subject " + rec.subject_id +
                             ": stream2_positive must be present iff stream2_sampled");
        if (rec.stream2_sampled) {
            if (*rec.stream2_positive)
                (rec.stream1_positive ? counts.n1 : counts.n2)++;
            else
                (rec.stream1_positive ? counts.n3 : counts.n4)++;
        } else if (rec.stream1_positive) {
            counts.n5++;
        }
        // unsampled, unsignaled records fall through to n6
    }
    counts.n6 = n_tot - counts.n1 - counts.n2 - counts.n3 - counts.n4 - counts.n5;
    if (counts.n6 < 0) throw InternalError("derived n6 negative");
    return counts;
}

/// Pools T-1 non-anchor streams into one composite stream: a subject is
/// signaled iff at least one stream signals it. Anchor fields pass through
/// untouched; input order is preserved.
inline std::vector<SubjectRecord> collapse_streams(std::span<const MultiStreamRecord> records) {
    std::vector<SubjectRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.stream_signals.empty())
            throw InputError("subject " + rec.subject_id + ": no non-anchor stream signals");
        bool any = false;
        for (bool s : rec.stream_signals) any = any || s;
        out.push_back({rec.subject_id, any, rec.stream2_sampled, rec.stream2_positive});
    }
    return out;
}

inline CrcTable derive_crc_table(const CellCounts& counts) {
    counts.validate();
    return {counts.n1, counts.n3 + counts.n5, counts.n2};
}

} // namespace anchorcrc
