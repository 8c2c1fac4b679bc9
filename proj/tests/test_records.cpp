#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "anchorcrc/csv.hpp"
#include "anchorcrc/records.hpp"

using namespace anchorcrc;

namespace {

SubjectRecord rec(std::string id, bool s1, bool sampled, std::optional<bool> s2 = std::nullopt) {
    return {std::move(id), s1, sampled, s2};
}

// builds `n` records of one observation type, ids prefixed to stay unique
void add_block(std::vector<SubjectRecord>& out, int n, const std::string& prefix, bool s1,
               bool sampled, std::optional<bool> s2) {
    for (int i = 0; i < n; ++i) out.push_back(rec(prefix + std::to_string(i), s1, sampled, s2));
}

std::vector<SubjectRecord> example_records() {
    std::vector<SubjectRecord> records;
    add_block(records, 14, "a", true, true, true);
    add_block(records, 17, "b", false, true, true);
    add_block(records, 3, "c", true, true, false);
    add_block(records, 166, "d", false, true, false);
    add_block(records, 66, "e", true, false, std::nullopt);
    return records;
}

} // namespace

TEST_CASE("tabulate_records classifies the six observation types") {
    const auto counts = tabulate_records(example_records(), 1029);
    CHECK(counts.n1 == 14);
    CHECK(counts.n2 == 17);
    CHECK(counts.n3 == 3);
    CHECK(counts.n4 == 166);
    CHECK(counts.n5 == 66);
    CHECK(counts.n6 == 763);
    CHECK(counts.n_tot == 1029);
    counts.validate();
    CHECK(counts.anchor_sample_size() == 200);
    CHECK(counts.anchor_positives() == 31);
    CHECK(counts.stream1_positives() == 83);
}

TEST_CASE("tabulate_records sends absent subjects to n6") {
    const auto counts = tabulate_records(std::vector<SubjectRecord>{}, 10);
    CHECK(counts.n1 + counts.n2 + counts.n3 + counts.n4 + counts.n5 == 0);
    CHECK(counts.n6 == 10);
}

TEST_CASE("tabulate_records hand-classified three-record case") {
    std::vector<SubjectRecord> records{rec("x", true, true, true), rec("y", false, true, false),
                                       rec("z", true, false)};
    const auto counts = tabulate_records(records, 5);
    CHECK(counts.n1 == 1);
    CHECK(counts.n2 == 0);
    CHECK(counts.n3 == 0);
    CHECK(counts.n4 == 1);
    CHECK(counts.n5 == 1);
    CHECK(counts.n6 == 2);
}

TEST_CASE("tabulate_records rejects bad input") {
    std::vector<SubjectRecord> dup{rec("same", true, false), rec("same", false, true, true)};
    CHECK_THROWS_AS(tabulate_records(dup, 10), InputError);

    std::vector<SubjectRecord> three{rec("a", true, false), rec("b", true, false),
                                     rec("c", true, false)};
    CHECK_THROWS_AS(tabulate_records(three, 2), InputError);

    std::vector<SubjectRecord> broken{rec("a", true, true)}; // sampled but no result
    CHECK_THROWS_AS(tabulate_records(broken, 5), InputError);
    std::vector<SubjectRecord> broken2{rec("a", true, false, true)}; // result without sampling
    CHECK_THROWS_AS(tabulate_records(broken2, 5), InputError);
}

TEST_CASE("tabulation matches an independent per-record classifier on random data") {
    std::mt19937 gen(7);
    auto coin = [&](double p) { return std::uniform_real_distribution<>(0, 1)(gen) < p; };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SubjectRecord> records;
        const int n = std::uniform_int_distribution<>(0, 300)(gen);
        for (int i = 0; i < n; ++i) {
            const bool sampled = coin(0.4);
            records.push_back(rec("id" + std::to_string(i), coin(0.3), sampled,
                                  sampled ? std::optional<bool>(coin(0.5)) : std::nullopt));
        }
        const std::int64_t n_tot = n + std::uniform_int_distribution<>(0, 100)(gen);

        // oracle: classify each record independently of the implementation
        std::int64_t expect[6] = {0, 0, 0, 0, 0, 0};
        for (const auto& r : records) {
            int cell;
            if (r.stream2_sampled && *r.stream2_positive)
                cell = r.stream1_positive ? 0 : 1;
            else if (r.stream2_sampled)
                cell = r.stream1_positive ? 2 : 3;
            else
                cell = r.stream1_positive ? 4 : 5;
            expect[cell]++;
        }
        expect[5] += n_tot - n;

        auto counts = tabulate_records(records, n_tot);
        CHECK(counts.n1 == expect[0]);
        CHECK(counts.n2 == expect[1]);
        CHECK(counts.n3 == expect[2]);
        CHECK(counts.n4 == expect[3]);
        CHECK(counts.n5 == expect[4]);
        CHECK(counts.n6 == expect[5]);

        // permutation invariance
        std::shuffle(records.begin(), records.end(), gen);
        const auto shuffled = tabulate_records(records, n_tot);
        CHECK(shuffled.n1 == counts.n1);
        CHECK(shuffled.n4 == counts.n4);
        CHECK(shuffled.n6 == counts.n6);

        // tabulate-then-derive agrees with direct m-cell construction
        const auto table = derive_crc_table(counts);
        CHECK(table.m11 == expect[0]);
        CHECK(table.m10 == expect[2] + expect[4]);
        CHECK(table.m01 == expect[1]);
    }
}

TEST_CASE("collapse_streams takes the OR of the signal columns") {
    std::vector<MultiStreamRecord> records{
        {"a", {true, false}, true, true},
        {"b", {false, false, false}, false, std::nullopt},
    };
    const auto out = collapse_streams(records);
    REQUIRE(out.size() == 2);
    CHECK(out[0].stream1_positive);
    CHECK(out[0].stream2_sampled);
    CHECK(out[0].stream2_positive == std::optional<bool>(true));
    CHECK_FALSE(out[1].stream1_positive);
    CHECK_FALSE(out[1].stream2_positive.has_value());

    std::vector<MultiStreamRecord> empty_signals{{"x", {}, false, std::nullopt}};
    CHECK_THROWS_AS(collapse_streams(empty_signals), InputError);
}

TEST_CASE("collapse_streams composite size follows inclusion-exclusion") {
    // three streams flagging 40, 25, 30 subjects; pairwise overlaps of 10
    // with a triple overlap of 5 -> union of 70
    std::vector<MultiStreamRecord> records;
    auto add = [&](int lo, int hi, bool a, bool b, bool c) {
        for (int i = lo; i <= hi; ++i)
            records.push_back({"s" + std::to_string(i), {a, b, c}, false, std::nullopt});
    };
    add(1, 5, true, true, true);    // triple
    add(6, 10, true, true, false);  // A&B only
    add(11, 15, true, false, true); // A&C only
    add(16, 20, false, true, true); // B&C only
    add(21, 45, true, false, false);
    add(46, 55, false, true, false);
    add(56, 70, false, false, true);

    std::int64_t per_stream[3] = {0, 0, 0};
    for (const auto& r : records)
        for (int k = 0; k < 3; ++k) per_stream[k] += r.stream_signals[k];
    REQUIRE(per_stream[0] == 40);
    REQUIRE(per_stream[1] == 25);
    REQUIRE(per_stream[2] == 30);

    const auto collapsed = collapse_streams(records);
    std::int64_t composite = 0;
    for (std::size_t i = 0; i < collapsed.size(); ++i) {
        composite += collapsed[i].stream1_positive;
        bool any = false;
        for (bool s : records[i].stream_signals) any = any || s;
        CHECK(collapsed[i].stream1_positive == any);
        CHECK(collapsed[i].subject_id == records[i].subject_id);
    }
    CHECK(composite == 70);
}

TEST_CASE("derive_crc_table maps the collapsed cells") {
    const CrcTable t = derive_crc_table({14, 17, 3, 166, 66, 763, 1029});
    CHECK(t.m11 == 14);
    CHECK(t.m10 == 69);
    CHECK(t.m01 == 17);

    const CrcTable zeros = derive_crc_table({0, 0, 0, 0, 0, 12, 12});
    CHECK(zeros.m11 == 0);
    CHECK(zeros.m10 == 0);
    CHECK(zeros.m01 == 0);

    const CrcTable small = derive_crc_table({2, 1, 0, 7, 3, 17, 30});
    CHECK(small.m11 == 2);
    CHECK(small.m10 == 3);
    CHECK(small.m01 == 1);
}

TEST_CASE("cell count invariants are enforced") {
    CHECK_THROWS_AS((CellCounts{1, 1, 1, 1, 1, 1, 7}.validate()), InputError);
    CHECK_THROWS_AS((CellCounts{-1, 1, 1, 1, 1, 1, 4}.validate()), InputError);
    CHECK_NOTHROW((CellCounts{1, 1, 1, 1, 1, 1, 6}.validate()));
}

TEST_CASE("record CSV reader handles both layouts") {
    std::istringstream single("subject_id,stream1_positive,stream2_sampled,stream2_positive\n"
                              "p1,1,1,1\n"
                              "p2,0,1,0\n"
                              "p3,1,0,\n");
    const auto records = read_record_csv(single);
    REQUIRE(records.size() == 3);
    CHECK(records[0].stream1_positive);
    CHECK(records[0].stream2_positive == std::optional<bool>(true));
    CHECK_FALSE(records[2].stream2_sampled);
    CHECK_FALSE(records[2].stream2_positive.has_value());

    std::istringstream multi("subject_id,stream_1,stream_2,stream_3,stream2_sampled,stream2_positive\n"
                             "p1,0,1,0,1,0\n"
                             "p2,0,0,0,0,\n");
    const auto collapsed = read_record_csv(multi);
    REQUIRE(collapsed.size() == 2);
    CHECK(collapsed[0].stream1_positive);
    CHECK_FALSE(collapsed[1].stream1_positive);
}

TEST_CASE("record CSV reader rejects malformed input") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_record_csv(empty), InputError);

    std::istringstream bad_header("id,stream1_positive,stream2_sampled,stream2_positive\nx,1,0,\n");
    CHECK_THROWS_AS(read_record_csv(bad_header), InputError);

    std::istringstream missing_result(
        "subject_id,stream1_positive,stream2_sampled,stream2_positive\np,1,1,\n");
    CHECK_THROWS_AS(read_record_csv(missing_result), InputError);

    std::istringstream stray_result(
        "subject_id,stream1_positive,stream2_sampled,stream2_positive\np,1,0,1\n");
    CHECK_THROWS_AS(read_record_csv(stray_result), InputError);

    std::istringstream not_binary(
        "subject_id,stream1_positive,stream2_sampled,stream2_positive\np,yes,1,1\n");
    CHECK_THROWS_AS(read_record_csv(not_binary), InputError);

    std::istringstream short_row(
        "subject_id,stream1_positive,stream2_sampled,stream2_positive\np,1,1\n");
    CHECK_THROWS_AS(read_record_csv(short_row), InputError);
}
