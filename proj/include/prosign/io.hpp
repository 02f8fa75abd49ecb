#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace prosign {

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and rename, so readers never observe a
// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view data);

// Minimal RFC 4180 CSV. Fields containing a comma, quote or newline are
// quoted; embedded quotes are doubled.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  void emit(const std::vector<std::string>& fields);
  std::size_t width_;
  std::string out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  // Index of a header column; throws ParseError when absent.
  std::size_t column(std::string_view name) const;
};

// Every row must have as many fields as the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

// Flat `key = value` configuration text. `#` starts a comment line.
std::map<std::string, std::string> parse_key_values(std::string_view text);

}  // namespace prosign
