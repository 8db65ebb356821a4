#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace celldx {

// Thrown on malformed input files; message carries path and line number.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal formatting. Parsing the result with
// parse_double reproduces the exact bit pattern.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

inline double parse_double(std::string_view s, const std::string& where) {
    // trim surrounding whitespace
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos)
        throw SchemaError(where + ": empty numeric field");
    s = s.substr(b, e - b + 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw SchemaError(where + ": bad numeric field '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') { out.push_back(cur); cur.clear(); }
        else if (c != '\r') cur += c;
    }
    out.push_back(cur);
    return out;
}

struct NumericCsv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV. If expected_header is non-empty the file header must
// match it exactly. Lines starting with '#' are skipped.
inline NumericCsv read_numeric_csv(const std::string& path,
                                   const std::string& expected_header = "") {
    std::ifstream in(path);
    if (!in) throw SchemaError(path + ": cannot open");
    NumericCsv t;
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_csv_line(line);
    if (!expected_header.empty()) {
        std::string got;
        for (size_t i = 0; i < t.header.size(); ++i)
            got += (i ? "," : "") + t.header[i];
        if (got != expected_header)
            throw SchemaError(path + ":1: expected header '" + expected_header +
                              "', got '" + got + "'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != t.header.size())
            throw SchemaError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto& f : fields)
            row.push_back(parse_double(f, path + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header)
        : own_(path), out_(&own_) {
        if (!own_) throw std::runtime_error(path + ": cannot open for writing");
        *out_ << header << "\n";
    }
    CsvWriter(std::ostream& sink, const std::string& header) : out_(&sink) {
        *out_ << header << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i)
            *out_ << (i ? "," : "") << format_double(vals[i]);
        *out_ << "\n";
    }
    // mixed row, already formatted
    void raw(const std::string& line) { *out_ << line << "\n"; }
    void comment(const std::string& text) { *out_ << "# " << text << "\n"; }

  private:
    std::ofstream own_;
    std::ostream* out_;
};

// FNV-1a, used to detect checkpoint mutation across pipeline stages.
inline std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h = 1469598103934665603ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open for hashing");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    return fnv1a(s.data(), s.size());
}

} // namespace celldx
