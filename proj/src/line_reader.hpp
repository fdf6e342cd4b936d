#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "clir/error.hpp"

namespace clir::detail {

inline std::ifstream open_input(const std::filesystem::path& path,
                                std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path,
                                 std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

/// Calls fn(line, lineno) for every non-blank line that is not a '#' comment.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        fn(line, lineno);
    }
}

/// Parses each content line as a JSON object; fn(record, "source:line").
template <typename Fn>
void for_each_record(std::istream& in, std::string_view source, Fn&& fn)
{
    for_each_line(in, [&](const std::string& line, std::size_t lineno) {
        const std::string where = std::string(source) + ":" + std::to_string(lineno);
        nlohmann::ordered_json rec;
        try {
            rec = nlohmann::ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where + ": malformed record: " + e.what());
        }
        if (!rec.is_object()) {
            throw DataError(where + ": record is not an object");
        }
        fn(rec, where);
    });
}

} // namespace clir::detail
