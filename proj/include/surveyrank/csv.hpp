#pragma once

// Minimal RFC 4180 reader/writer: comma delimiter, double-quote escaping,
// UTF-8 passed through untouched.

#include "surveyrank/common.hpp"

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace surveyrank::csv {

using Row = std::vector<std::string>;

// Reads one logical record (quoted fields may span lines). Returns nullopt at EOF.
inline std::optional<Row> read_row(std::istream& in) {
    Row row;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            row.push_back(std::move(field));
            return row;
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            row.push_back(std::move(field));
            return row;
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw DataError("csv: unterminated quoted field at end of input");
    if (!any) return std::nullopt;
    row.push_back(std::move(field));
    return row;
}

inline std::vector<Row> read_all(std::istream& in) {
    std::vector<Row> rows;
    while (auto r = read_row(in)) rows.push_back(std::move(*r));
    return rows;
}

inline std::vector<Row> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_all(in);
}

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << escape(row[i]);
    }
    out << '\n';
}

inline std::string to_string(const std::vector<Row>& rows) {
    std::ostringstream os;
    for (const auto& r : rows) write_row(os, r);
    return os.str();
}

}  // namespace surveyrank::csv
