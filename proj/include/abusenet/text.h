#ifndef ABUSENET_TEXT_H_
#define ABUSENET_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "abusenet/corpus.h"

namespace abusenet {

// ---------------------------------------------------------------------------
// UTF-8 helpers. Invalid byte sequences decode to U+FFFD, one byte at a time.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

bool is_unicode_space(char32_t cp);
// Punctuation and symbol codepoints removed by the cleaning pass.
bool is_symbol(char32_t cp);

struct CodepointRange {
  char32_t lo = 0;
  char32_t hi = 0;  // inclusive
  bool contains(char32_t cp) const { return cp >= lo && cp <= hi; }
};

// Emoticons, pictographs, transport, supplemental symbols, misc symbols,
// dingbats, regional indicators, variation selectors, ZWJ, keycap, tags.
std::vector<CodepointRange> default_emoji_ranges();
// Inclusive hex ranges one per line ("1F600-1F64F" or a single "200D");
// '#' starts a comment.
std::vector<CodepointRange> load_emoji_ranges(const std::string& path);

struct PreprocessConfig {
  std::map<Language, std::string> stopword_files;
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_html = true;
  // true: "#word" -> "word"; false: the '#' stays attached to the word.
  bool strip_hashmark = true;
  bool lowercase_latin = true;
  std::vector<CodepointRange> emoji_ranges = default_emoji_ranges();
};

// Removes markup tags and entities, URLs, @-mentions, emoji and free-standing
// punctuation; lowercases Latin letters; collapses whitespace. Punctuation
// joining two word characters (don't, well-known) is kept. Idempotent.
std::string clean(std::string_view text, const PreprocessConfig& config);

// Splits on Unicode whitespace. Punctuation that is not internal to a word is
// split off and discarded.
std::vector<std::string> tokenize(std::string_view text);

using StopwordSet = std::unordered_set<std::string>;

// One token per line, UTF-8, '#' comment lines ignored. Throws ConfigError if
// the file is missing or holds no entries.
StopwordSet load_stopword_file(const std::string& path);

class Stopwords {
 public:
  Stopwords() = default;
  static Stopwords from_config(const PreprocessConfig& config);

  void set(Language lang, StopwordSet words) { lists_[lang] = std::move(words); }
  bool has(Language lang) const { return lists_.count(lang) != 0; }
  const StopwordSet& list(Language lang) const;

  // Order-preserving filter. Throws ConfigError when no list is configured
  // for the language.
  std::vector<std::string> remove(const std::vector<std::string>& tokens,
                                  Language lang) const;

 private:
  std::map<Language, StopwordSet> lists_;
};

// clean -> tokenize -> stopword removal.
std::vector<std::string> preprocess(std::string_view text, Language lang,
                                    const PreprocessConfig& config,
                                    const Stopwords& stopwords);

// ---------------------------------------------------------------------------
inline constexpr std::int32_t kPadIndex = 0;
inline constexpr std::int32_t kOovIndex = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kOovToken = "<unk>";

class Vocabulary {
 public:
  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  std::int32_t index_of(std::string_view token) const;  // OOV when unknown
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t min_frequency() const { return min_frequency_; }

  // Appends a new token; returns its index (existing index if present).
  std::int32_t add(const std::string& token);

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>&,
                                std::size_t);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::size_t min_frequency_ = 1;
};

// Tokens with count >= min_frequency receive indices 2.. ordered by
// (frequency desc, token bytewise asc). Throws DataError on an empty corpus.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t min_frequency = 1);

struct EncodedSequence {
  std::vector<std::int32_t> indices;
  std::size_t true_length = 0;
};

inline constexpr std::size_t kDefaultSequenceLength = 100;

// Keeps the first max_len tokens; post-pads with PAD.
EncodedSequence encode(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab,
                       std::size_t max_len = kDefaultSequenceLength);

}  // namespace abusenet

#endif  // ABUSENET_TEXT_H_
