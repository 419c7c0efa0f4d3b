#include "storynet/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

namespace storynet::csv {

FileError::FileError(std::string file, std::size_t line, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message),
      file_(std::move(file)),
      line_(line),
      message_(message) {}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw FileError(source, 1, "missing column '" + std::string(name) + "'");
}

namespace {

// Splits one logical record starting at `pos`; advances `pos` and `line`.
std::vector<std::string> next_record(std::string_view text, std::size_t& pos, std::size_t& line,
                                     const std::string& source) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  const std::size_t start_line = line;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field.push_back('"');
          pos += 2;
          continue;
        }
        quoted = false;
        ++pos;
        continue;
      }
      if (c == '\n') ++line;
      field.push_back(c);
      ++pos;
      continue;
    }
    if (c == '"') {
      if (!field.empty() || was_quoted)
        throw FileError(source, line, "unexpected quote inside unquoted field");
      quoted = true;
      was_quoted = true;
      ++pos;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
      ++pos;
    } else if (c == '\r') {
      ++pos;
    } else if (c == '\n') {
      ++pos;
      ++line;
      fields.push_back(std::move(field));
      return fields;
    } else {
      if (was_quoted) throw FileError(source, line, "characters after closing quote");
      field.push_back(c);
      ++pos;
    }
  }
  if (quoted) throw FileError(source, start_line, "unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

bool blank(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\r')) ++pos;
  return pos >= text.size() || text[pos] == '\n';
}

void skip_line(std::string_view text, std::size_t& pos, std::size_t& line) {
  while (pos < text.size() && text[pos] != '\n') ++pos;
  if (pos < text.size()) ++pos;
  ++line;
}

}  // namespace

Table parse(std::string_view text, std::string source) {
  Table table;
  table.source = std::move(source);
  std::size_t pos = 0;
  std::size_t line = 1;
  // UTF-8 byte order mark
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;

  bool have_header = false;
  while (pos < text.size()) {
    if (blank(text, pos)) {
      skip_line(text, pos, line);
      continue;
    }
    if (!have_header && text[pos] == '#') {
      const std::size_t end = text.find('\n', pos);
      std::string comment(text.substr(pos + 1, end == std::string_view::npos ? end : end - pos - 1));
      if (!comment.empty() && comment.back() == '\r') comment.pop_back();
      table.comments.push_back(std::move(comment));
      skip_line(text, pos, line);
      continue;
    }
    const std::size_t record_line = line;
    auto fields = next_record(text, pos, line, table.source);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw FileError(table.source, record_line,
                      "expected " + std::to_string(table.header.size()) + " fields, found " +
                          std::to_string(fields.size()));
    table.rows.push_back(Row{record_line, std::move(fields)});
  }
  if (!have_header) throw FileError(table.source, 1, "missing header row");
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path.string(), 0, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

void write_row(std::ostream& out, std::initializer_list<std::string> fields) {
  write_row(out, std::span<const std::string>(fields.begin(), fields.size()));
}

}  // namespace storynet::csv
