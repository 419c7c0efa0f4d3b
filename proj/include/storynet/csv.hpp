#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace storynet::csv {

/// Error tied to a position in an input file. `line` is 1-based, 0 when unknown.
class FileError : public std::runtime_error {
 public:
  FileError(std::string file, std::size_t line, const std::string& message);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string message_;
};

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// A parsed CSV document: header row, data rows, and leading `#` comment lines.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::string> comments;
  std::vector<Row> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Same as column() but throws a FileError naming the missing column.
  std::size_t require_column(std::string_view name) const;
};

/// RFC 4180 parsing: comma separator, double-quote quoting with "" escapes,
/// quoted fields may span lines. Lines starting with '#' before the header
/// are collected as comments; blank lines are skipped.
Table parse(std::string_view text, std::string source = "<memory>");
Table read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a separator, quote, or line break.
std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);
void write_row(std::ostream& out, std::initializer_list<std::string> fields);

}  // namespace storynet::csv
