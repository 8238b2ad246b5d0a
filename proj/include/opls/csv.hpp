#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace opls::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// 1-based line number of each row in the source text (header is line 1).
    std::vector<std::size_t> lines;
};

/// Comma-separated, first line is the header. Quoted fields are not
/// supported; surrounding whitespace of each field is trimmed and blank lines
/// are skipped. Throws InputError on ragged rows.
Table parse(std::string_view text);

/// Shortest round-trip decimal representation, independent of locale.
std::string format_double(double value);

/// Strict full-field double parse; returns false on any trailing garbage.
bool parse_double(std::string_view field, double& out);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Accumulates rows and renders them as CSV text.
class Writer {
public:
    explicit Writer(std::vector<std::string> header);
    void add_row(std::vector<std::string> fields);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace opls::csv
