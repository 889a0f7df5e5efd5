#include "abusenet/csv.h"

#include <fstream>

#include "abusenet/error.h"

namespace abusenet {

CsvReader::CsvReader(std::istream& in, std::string source_name)
    : in_(in), source_(std::move(source_name)) {}

bool CsvReader::next(CsvRecord& record) {
  record.fields.clear();
  if (first_) {
    first_ = false;
    char bom[3];
    if (in_.read(bom, 3) && static_cast<unsigned char>(bom[0]) == 0xEF &&
        static_cast<unsigned char>(bom[1]) == 0xBB &&
        static_cast<unsigned char>(bom[2]) == 0xBF) {
      // skipped
    } else {
      in_.clear();
      in_.seekg(0);
    }
  }
  int c = in_.get();
  if (c == EOF) return false;
  record.line = line_;

  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  for (;; c = in_.get()) {
    if (quoted) {
      if (c == EOF) {
        throw ParseError(source_ + ":" + std::to_string(record.line) +
                         ": unterminated quoted field");
      }
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == EOF || c == '\n') {
      if (c == '\n') ++line_;
      if (!field_started_quoted && !field.empty() && field.back() == '\r') {
        field.pop_back();
      }
      record.fields.push_back(std::move(field));
      return true;
    }
    if (c == '\r' && in_.peek() == '\n') continue;
    if (c == ',') {
      record.fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (c == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
}

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_stream(in, path);
}

CsvTable CsvTable::read_stream(std::istream& in, const std::string& name) {
  CsvTable table;
  table.source_ = name;
  CsvReader reader(in, name);
  CsvRecord rec;
  if (!reader.next(rec)) throw SchemaError(name + ": empty file, no header row");
  table.header_ = std::move(rec.fields);
  while (reader.next(rec)) {
    // blank line
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    if (rec.fields.size() != table.header_.size()) {
      throw ParseError(name + ":" + std::to_string(rec.line) + ": expected " +
                       std::to_string(table.header_.size()) + " fields, got " +
                       std::to_string(rec.fields.size()));
    }
    table.rows_.push_back(std::move(rec));
    rec = CsvRecord{};
  }
  return table;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  auto idx = column(name);
  if (!idx) {
    throw SchemaError(source_ + ": missing required column '" +
                      std::string(name) + "'");
  }
  return *idx;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace abusenet
