#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "anchorcrc/errors.hpp"
#include "anchorcrc/records.hpp"

namespace anchorcrc {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

inline bool parse_bool01(const std::string& s, std::size_t line_no, const char* column) {
    if (s == "0") return false;
    if (s == "1") return true;
    throw InputError("line " + std::to_string(line_no) + ": column " + column +
                     " must be 0 or 1, got '" + s + "'");
}

} // namespace detail

/// Reads the subject record CSV. Two accepted headers:
///   subject_id,stream1_positive,stream2_sampled,stream2_positive
///   subject_id,stream_1,...,stream_K,stream2_sampled,stream2_positive
/// with 0/1 values and stream2_positive left empty for unsampled subjects.
/// The multi-stream layout is collapsed into a single composite stream.
inline std::vector<SubjectRecord> read_record_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("record file is empty (header required)");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header.front() != "subject_id" ||
        header[header.size() - 2] != "stream2_sampled" ||
        header.back() != "stream2_positive")
        throw InputError("unrecognized record header; expected subject_id,"
                         "stream1_positive|stream_1..stream_K,stream2_sampled,stream2_positive");

    const std::size_t n_streams = header.size() - 3;
    const bool single = n_streams == 1;
    if (single && header[1] != "stream1_positive" && header[1] != "stream_1")
        throw InputError("unrecognized signal column '" + header[1] + "'");
    if (!single) {
        for (std::size_t k = 0; k < n_streams; ++k) {
            const std::string expected = "stream_" + std::to_string(k + 1);
            if (header[k + 1] != expected)
                throw InputError("expected column '" + expected + "', got '" + header[k + 1] + "'");
        }
    }

    std::vector<MultiStreamRecord> multi;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        MultiStreamRecord rec;
        rec.subject_id = fields[0];
        if (rec.subject_id.empty())
            throw InputError("line " + std::to_string(line_no) + ": empty subject_id");
        for (std::size_t k = 0; k < n_streams; ++k)
            rec.stream_signals.push_back(
                detail::parse_bool01(fields[k + 1], line_no, "stream signal"));
        rec.stream2_sampled =
            detail::parse_bool01(fields[header.size() - 2], line_no, "stream2_sampled");
        const std::string& result = fields.back();
        if (rec.stream2_sampled) {
            if (result.empty())
                throw InputError("line " + std::to_string(line_no) +
                                 ": sampled subject lacks stream2_positive");
            rec.stream2_positive = detail::parse_bool01(result, line_no, "stream2_positive");
        } else if (!result.empty()) {
            throw InputError("line " + std::to_string(line_no) +
                             ": unsampled subject carries a stream2_positive value");
        }
        multi.push_back(std::move(rec));
    }
    return collapse_streams(multi);
}

} // namespace anchorcrc
