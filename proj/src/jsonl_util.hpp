#pragma once

// Internal JSONL helpers shared by corpus and poison persistence.

#include <cstddef>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "bdlab/errors.hpp"

namespace bdlab::detail {

using ordered_json = nlohmann::ordered_json;

/// Invoke fn(record, line_number) for every non-blank line. Line numbers
/// are 1-based. Malformed JSON becomes parse_error carrying the line.
inline void for_each_jsonl_record(
    const std::string& path,
    const std::function<void(const ordered_json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open file for reading", path);
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        ordered_json record = ordered_json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw parse_error("malformed JSONL record", line_no);
        }
        fn(record, line_no);
    }
}

/// Fetch a required string field or raise schema_error naming it.
inline std::string required_string(const ordered_json& record,
                                   const char* field, std::size_t line_no) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        throw schema_error("line " + std::to_string(line_no) +
                           ": missing or non-string field \"" + field + "\"");
    }
    return it->get<std::string>();
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open file for writing", path);
    }
    return out;
}

}  // namespace bdlab::detail
