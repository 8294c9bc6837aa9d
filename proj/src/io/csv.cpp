#include "ulab/io/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "binary.hpp"

namespace ulab {

std::string fixed(double value, int decimals) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    std::string out(buf, static_cast<std::size_t>(n));
    if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
    return out;
}

std::string exact(double value) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, r.ptr);
}

namespace {

std::string quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += quote(row[i]);
    }
    out += '\n';
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("csv: empty header");
}

void CsvTable::add(std::vector<std::string> row) {
    if (row.size() != header_.size()) {
        throw std::invalid_argument("csv: row has " + std::to_string(row.size()) + " fields, header has " +
                                    std::to_string(header_.size()));
    }
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    append_row(out, header_);
    for (const auto& r : rows_) append_row(out, r);
    return out;
}

void CsvTable::save(const std::filesystem::path& path) const { save_text(path, str()); }

void save_text(const std::filesystem::path& path, const std::string& text) { detail::write_file(path, text); }

}  // namespace ulab
