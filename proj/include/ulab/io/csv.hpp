#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ulab {

/// Fixed-point rendering with `decimals` digits after the point.
std::string fixed(double value, int decimals);
/// Shortest text that reads back to the same double.
std::string exact(double value);

/// Comma-separated table with a header row and LF line endings. Fields with
/// commas, quotes or newlines are quoted.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add(std::vector<std::string> row);
    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes `text` to `path`, creating parent directories.
void save_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ulab
