#ifndef ABUSENET_EMBEDDINGS_H_
#define ABUSENET_EMBEDDINGS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "abusenet/text.h"

namespace abusenet {

inline constexpr std::size_t kDefaultEmbeddingDim = 300;

// Parsed pretrained vectors (GloVe or FastText text format).
class WordVectorFile {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  bool had_header() const { return had_header_; }
  // Lines whose word had already been seen; the last occurrence wins.
  std::size_t duplicate_count() const { return duplicates_; }

  const std::vector<std::string>& words() const { return words_; }
  bool contains(std::string_view word) const;
  // Empty span when the word is absent.
  std::span<const float> find(std::string_view word) const;
  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dimension_, dimension_};
  }

  // Inserts or overwrites one entry. The first insert fixes the dimension.
  void put(const std::string& word, std::span<const float> vec);

  bool operator==(const WordVectorFile& other) const;

 private:
  friend WordVectorFile parse_vector_stream(std::istream&, const std::string&);
  friend WordVectorFile read_vector_cache(const std::string&);

  std::size_t dimension_ = 0;
  bool had_header_ = false;
  std::size_t duplicates_ = 0;
  std::vector<std::string> words_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Whitespace separated text: optional "count dim" header line, then a word
// followed by `dim` floats per line. The dimension is taken from the first
// data line and enforced afterwards. Lines with more fields than dim + 1 are
// read as multi-token words (GloVe 840B has a few).
WordVectorFile parse_vector_file(const std::string& path);
WordVectorFile parse_vector_stream(std::istream& in, const std::string& name);

// Writes the text format back out (no header unless requested).
void write_vector_file(const std::string& path, const WordVectorFile& vectors,
                       bool with_header = false);

// Binary cache: "EMB1", dim u32 LE, count u64 LE, then per entry
// [len u16 LE, word bytes, dim x f32 LE].
void write_vector_cache(const std::string& path, const WordVectorFile& vectors);
WordVectorFile read_vector_cache(const std::string& path);

// Reads `cache_path` when it exists and is newer than `path`; otherwise parses
// the text file and writes the cache. An empty cache_path disables caching.
WordVectorFile load_vectors(const std::string& path, const std::string& cache_path);

// Frozen |V| x dim lookup table aligned with a vocabulary.
struct EmbeddingTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> matrix;  // row-major
  double coverage = 0.0;      // found / non-reserved vocabulary tokens
  std::size_t found = 0;
  static constexpr bool trainable = false;

  std::span<const float> row(std::size_t i) const {
    return {matrix.data() + i * dim, dim};
  }
};

struct BuildMatrixOptions {
  std::size_t expected_dim = kDefaultEmbeddingDim;
  // Seeded uniform(-0.05, 0.05) for tokens missing from the file instead of
  // zeros. PAD and OOV stay zero either way.
  bool random_missing = false;
  std::uint64_t seed = 0;
};

EmbeddingTable build_matrix(const Vocabulary& vocab, const WordVectorFile& vectors,
                            const BuildMatrixOptions& options = {});

}  // namespace abusenet

#endif  // ABUSENET_EMBEDDINGS_H_
