#ifndef ABUSENET_CSV_H_
#define ABUSENET_CSV_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace abusenet {

// One parsed CSV record plus the 1-based physical line it started on.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// Streaming RFC 4180 reader: comma separated, double-quote escaping, quoted
// fields may span lines. Accepts LF and CRLF. A leading UTF-8 BOM is skipped.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source_name);

  // Returns false at end of input. Throws ParseError on an unterminated
  // quoted field.
  bool next(CsvRecord& record);

  const std::string& source_name() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 1;
  bool first_ = true;
};

// Header-indexed view over a whole CSV file.
class CsvTable {
 public:
  static CsvTable read_file(const std::string& path);
  static CsvTable read_stream(std::istream& in, const std::string& name);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<CsvRecord>& rows() const { return rows_; }
  const std::string& source_name() const { return source_; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws SchemaError naming the column when it is absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<CsvRecord> rows_;
};

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace abusenet

#endif  // ABUSENET_CSV_H_
