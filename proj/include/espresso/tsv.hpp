#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace espresso {

// A tab-separated table with a mandatory header row.
struct TsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
};

// Parses TSV text. Empty lines are skipped. Every data row must have as many
// cells as the header. When `required` is non-empty those columns must exist.
TsvTable parse_tsv(std::string_view text,
                   std::initializer_list<std::string_view> required = {});

std::string join_tsv_row(const std::vector<std::string>& cells);

// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text, std::size_t line);
std::int64_t parse_int(std::string_view text, std::size_t line);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace espresso
