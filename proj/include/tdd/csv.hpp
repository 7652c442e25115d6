#pragma once

#include "tdd/errors.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tdd {

namespace csv {

inline constexpr std::string_view kDiverged = "div";
inline constexpr std::string_view kInfinity = "inf";
inline constexpr std::string_view kNotApplicable = "n/a";

/// Shortest decimal string that parses back to the same double.
/// Infinities become "inf"/"-inf", NaN becomes "n/a".
inline std::string format_number(double value) {
    if (std::isnan(value)) return std::string(kNotApplicable);
    if (std::isinf(value)) return value > 0 ? std::string(kInfinity) : "-" + std::string(kInfinity);
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc()) throw Error(ErrorKind::io, "number formatting failed");
    return std::string(buffer, end);
}

/// Quotes a text cell when it contains a separator, quote or newline.
inline std::string quote(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string format_optional(const std::optional<double>& value) {
    return value ? format_number(*value) : std::string(kNotApplicable);
}

}  // namespace csv

/// Rectangular table of preformatted cells with a fixed header and optional
/// trailing '#' comment lines.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
        if (header_.empty()) throw Error(ErrorKind::invalid_dimension, "CSV header is empty");
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t columns() const { return header_.size(); }

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) {
            throw Error(ErrorKind::invalid_dimension, "CSV row has " + std::to_string(cells.size()) +
                                                          " cells, header has " + std::to_string(header_.size()));
        }
        rows_.push_back(std::move(cells));
    }

    void add_numeric_row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(csv::format_number(v));
        add_row(std::move(cells));
    }

    /// Key/value line written after the data as "# key,value".
    void add_footer(std::string key, std::string value) { footer_.emplace_back(std::move(key), std::move(value)); }
    const std::vector<std::pair<std::string, std::string>>& footer() const { return footer_; }

    void write(std::ostream& out) const {
        write_line(out, header_);
        for (const auto& row : rows_) write_line(out, row);
        for (const auto& [key, value] : footer_) out << "# " << key << ',' << value << '\n';
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
        write(out);
        if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
    }

private:
    static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out << ',';
            out << cells[i];
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::pair<std::string, std::string>> footer_;
};

}  // namespace tdd
