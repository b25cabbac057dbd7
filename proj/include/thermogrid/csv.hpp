#pragma once

// Minimal CSV writing/reading. Doubles are written in shortest round-trip form
// with '.' as decimal separator, independent of the global locale.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "thermogrid/errors.hpp"

namespace thermogrid::csv {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

/// Round-trip exact: 17 significant digits.
inline std::string format_double17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw InputMismatch("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw InputMismatch("not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

/// Writes one comma-separated row; the newline is emitted on destruction.
class Row {
public:
    explicit Row(std::ostream& os) : os_(os) {}
    Row(const Row&) = delete;
    Row& operator=(const Row&) = delete;
    ~Row() { os_ << '\n'; }

    template <typename T>
    Row& operator<<(const T& v) {
        if (!first_) os_ << ',';
        first_ = false;
        if constexpr (std::is_floating_point_v<T>) {
            os_ << format_double(static_cast<double>(v));
        } else if constexpr (std::is_same_v<T, bool>) {
            os_ << (v ? 1 : 0);
        } else {
            os_ << v;
        }
        return *this;
    }

private:
    std::ostream& os_;
    bool first_ = true;
};

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw InputMismatch("missing CSV column '" + std::string(name) + "'");
    }
};

/// Reads a header-first CSV. Blank lines and lines starting with '#' are skipped.
inline Table read(std::istream& is) {
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InputMismatch("CSV row has " + std::to_string(cells.size()) +
                                " cells, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) {
        throw InputMismatch("empty CSV");
    }
    return t;
}

}  // namespace thermogrid::csv
