#pragma once

#include <charconv>
#include <string>
#include <vector>

#include "fundus/error.hpp"

namespace fundus::csv {

// Plain comma splitting, surrounding whitespace trimmed. Fields (including
// paths) must not themselves contain commas.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string field = line.substr(start, comma == std::string::npos ? comma : comma - start);
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline int parse_int(const std::string& s, const char* what, int line_no) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ValidationError("row " + std::to_string(line_no) + ": " + what + " is not an integer: '" +
                              s + "'");
    return v;
}

inline double parse_double(const std::string& s, const char* what, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("row " + std::to_string(line_no) + ": " + what + " is not a number: '" +
                              s + "'");
    }
}

} // namespace fundus::csv
