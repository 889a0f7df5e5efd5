#include "abusenet/embeddings.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "abusenet/error.h"
#include "abusenet/rng.h"

namespace abusenet {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_integer(std::string_view s) {
  std::uint64_t v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

template <typename U>
U get_le(std::istream& in, const std::string& path) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(U))) {
    throw CorruptionError(path + ": truncated embedding cache");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

}  // namespace

bool WordVectorFile::contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

std::span<const float> WordVectorFile::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return {};
  return row(it->second);
}

void WordVectorFile::put(const std::string& word, std::span<const float> vec) {
  if (dimension_ == 0) dimension_ = vec.size();
  if (vec.size() != dimension_) {
    throw ParseError("vector for '" + word + "' has " + std::to_string(vec.size()) +
                     " values, expected " + std::to_string(dimension_));
  }
  auto [it, inserted] = index_.try_emplace(word, words_.size());
  if (inserted) {
    words_.push_back(word);
    values_.insert(values_.end(), vec.begin(), vec.end());
  } else {
    ++duplicates_;
    std::copy(vec.begin(), vec.end(), values_.begin() + it->second * dimension_);
  }
}

bool WordVectorFile::operator==(const WordVectorFile& other) const {
  return dimension_ == other.dimension_ && words_ == other.words_ &&
         values_ == other.values_;
}

WordVectorFile parse_vector_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_vector_stream(in, path);
}

WordVectorFile parse_vector_stream(std::istream& in, const std::string& name) {
  WordVectorFile file;
  std::string line;
  std::size_t line_no = 0;
  std::size_t header_dim = 0;
  bool seen_content = false;
  std::vector<float> buf;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (!seen_content) {
      seen_content = true;
      if (fields.size() == 2 && is_integer(fields[0]) && is_integer(fields[1])) {
        file.had_header_ = true;
        header_dim = std::stoul(std::string(fields[1]));
        continue;
      }
    }
    if (file.dimension_ == 0) {
      if (fields.size() < 2) throw ParseError(where + ": vector line has no values");
      file.dimension_ = fields.size() - 1;
      if (header_dim != 0 && header_dim != file.dimension_) {
        throw ParseError(where + ": header declares dimension " +
                         std::to_string(header_dim) + " but line has " +
                         std::to_string(file.dimension_));
      }
    }
    const std::size_t dim = file.dimension_;
    if (fields.size() < dim + 1) {
      throw ParseError(where + ": expected " + std::to_string(dim) +
                       " values, found " + std::to_string(fields.size() - 1));
    }
    const std::size_t word_fields = fields.size() - dim;
    std::string word(fields[0]);
    for (std::size_t k = 1; k < word_fields; ++k) {
      word.push_back(' ');
      word.append(fields[k]);
    }
    buf.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_float(fields[word_fields + k], buf[k])) {
        throw ParseError(where + ": non-numeric or non-finite vector field '" +
                         std::string(fields[word_fields + k]) + "'");
      }
    }
    file.put(word, buf);
  }
  if (file.words_.empty()) throw ParseError(name + ": no vectors found (empty file)");
  if (file.duplicates_ > 0) {
    std::cerr << "warning: " << name << ": " << file.duplicates_
              << " duplicate word(s), last occurrence kept\n";
  }
  return file;
}

void write_vector_file(const std::string& path, const WordVectorFile& vectors,
                       bool with_header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  if (with_header) out << vectors.size() << ' ' << vectors.dimension() << '\n';
  char num[64];
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out << vectors.words()[i];
    for (float v : vectors.row(i)) {
      auto [ptr, ec] = std::to_chars(num, num + sizeof(num), v);
      out << ' ' << std::string_view(num, static_cast<std::size_t>(ptr - num));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

void write_vector_cache(const std::string& path, const WordVectorFile& vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("EMB1", 4);
  put_u32(out, static_cast<std::uint32_t>(vectors.dimension()));
  put_u64(out, vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const std::string& w = vectors.words()[i];
    if (w.size() > 0xFFFF) throw IoError("word too long for cache: " + w.substr(0, 32));
    put_u16(out, static_cast<std::uint16_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
    for (float v : vectors.row(i)) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("write failed for " + path);
}

WordVectorFile read_vector_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) {
    throw CorruptionError(path + ": bad magic, not an EMB1 cache");
  }
  WordVectorFile file;
  const auto dim = get_le<std::uint32_t>(in, path);
  const auto count = get_le<std::uint64_t>(in, path);
  if (dim == 0) throw CorruptionError(path + ": zero dimension");
  file.dimension_ = dim;
  std::vector<float> buf(dim);
  std::string word;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in, path);
    word.resize(len);
    if (!in.read(word.data(), len)) throw CorruptionError(path + ": truncated embedding cache");
    for (auto& v : buf) v = std::bit_cast<float>(get_le<std::uint32_t>(in, path));
    file.put(word, buf);
  }
  if (in.peek() != EOF) throw CorruptionError(path + ": trailing bytes after last entry");
  return file;
}

WordVectorFile load_vectors(const std::string& path, const std::string& cache_path) {
  namespace fs = std::filesystem;
  if (!cache_path.empty() && fs::exists(cache_path) && fs::exists(path) &&
      fs::last_write_time(cache_path) >= fs::last_write_time(path)) {
    return read_vector_cache(cache_path);
  }
  WordVectorFile file = parse_vector_file(path);
  if (!cache_path.empty()) write_vector_cache(cache_path, file);
  return file;
}

EmbeddingTable build_matrix(const Vocabulary& vocab, const WordVectorFile& vectors,
                            const BuildMatrixOptions& options) {
  if (vectors.dimension() != options.expected_dim) {
    throw ConfigError("embedding dimension " + std::to_string(vectors.dimension()) +
                      " does not match model embed_dim " +
                      std::to_string(options.expected_dim));
  }
  EmbeddingTable table;
  table.rows = vocab.size();
  table.dim = vectors.dimension();
  table.matrix.assign(table.rows * table.dim, 0.0f);
  Rng rng(options.seed);
  for (std::size_t i = 2; i < vocab.size(); ++i) {
    float* dst = table.matrix.data() + i * table.dim;
    const auto vec = vectors.find(vocab.token(i));
    if (!vec.empty()) {
      std::copy(vec.begin(), vec.end(), dst);
      ++table.found;
    } else if (options.random_missing) {
      for (std::size_t k = 0; k < table.dim; ++k) {
        dst[k] = static_cast<float>(rng.uniform(-0.05, 0.05));
      }
    }
  }
  const std::size_t candidates = vocab.size() > 2 ? vocab.size() - 2 : 0;
  table.coverage = candidates ? static_cast<double>(table.found) / candidates : 0.0;
  return table;
}

}  // namespace abusenet
