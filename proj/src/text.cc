#include "abusenet/text.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "abusenet/error.h"

namespace abusenet {

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (b & 0x3F);
      }
    }
    if (ok) {
      // overlong forms and surrogates
      static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
      if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) ok = false;
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 ||
         cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000 ||
         cp == 0xFEFF;
}

namespace {

bool is_control(char32_t cp) {
  return cp < 0x20 || (cp >= 0x7F && cp <= 0x9F);
}

bool in_ranges(char32_t cp, const std::vector<CodepointRange>& ranges) {
  for (const auto& r : ranges) {
    if (r.contains(cp)) return true;
  }
  return false;
}

bool is_ascii_word(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z') || cp == '_';
}

// Punctuation that survives when it joins two word characters.
bool is_joiner(char32_t cp) {
  return cp == U'\'' || cp == U'-' || cp == 0x2019;
}

// Anything not removed by the cleaning stages counts as part of a word.
bool is_word_char(char32_t cp) {
  return !is_unicode_space(cp) && !is_symbol(cp) && !is_control(cp);
}

bool ieq_prefix(const std::u32string& s, std::size_t pos, std::u32string_view lit) {
  if (pos + lit.size() > s.size()) return false;
  for (std::size_t k = 0; k < lit.size(); ++k) {
    char32_t c = s[pos + k];
    if (c >= 'A' && c <= 'Z') c += 32;
    if (c != lit[k]) return false;
  }
  return true;
}

bool is_alpha_ascii(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

void blank(std::u32string& s, std::size_t from, std::size_t to) {
  for (std::size_t k = from; k < to; ++k) s[k] = U' ';
}

// <tag ...>, </tag>, <!-- ... --> and &entity; sequences.
void strip_markup(std::u32string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == U'<' && i + 1 < s.size()) {
      std::size_t j = i + 1;
      if (s[j] == U'/') ++j;
      if (j < s.size() && (is_alpha_ascii(s[j]) || s[j] == U'!')) {
        std::size_t k = j;
        while (k < s.size() && s[k] != U'>' && s[k] != U'<' && s[k] != U'\n' &&
               k - i < 512) {
          ++k;
        }
        if (k < s.size() && s[k] == U'>') {
          blank(s, i, k + 1);
          i = k;
        }
      }
    } else if (s[i] == U'&' && i + 2 < s.size()) {
      std::size_t j = i + 1;
      if (s[j] == U'#') {
        ++j;
        if (j < s.size() && (s[j] == U'x' || s[j] == U'X')) ++j;
      }
      std::size_t k = j;
      while (k < s.size() && k - j < 10 && is_ascii_word(s[k]) && s[k] != U'_') ++k;
      if (k > j && k < s.size() && s[k] == U';') {
        blank(s, i, k + 1);
        i = k;
      }
    }
  }
}

void strip_urls(std::u32string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (ieq_prefix(s, i, U"http://") || ieq_prefix(s, i, U"https://") ||
        ieq_prefix(s, i, U"www.")) {
      std::size_t k = i;
      while (k < s.size() && !is_unicode_space(s[k])) ++k;
      blank(s, i, k);
      i = k;
    }
  }
}

void strip_mentions(std::u32string& s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] == U'@' && is_ascii_word(s[i + 1])) {
      std::size_t k = i + 1;
      while (k < s.size() && is_ascii_word(s[k])) ++k;
      blank(s, i, k);
      i = k - 1;
    }
  }
}

// Replaces every symbol that is not a word-internal joiner with a space.
// Decisions use the pre-pass neighbours so the result does not depend on scan
// direction.
void strip_symbols(std::u32string& s, bool keep_hashmark) {
  const std::u32string orig = s;
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const char32_t cp = orig[i];
    if (is_control(cp)) {
      s[i] = U' ';
      continue;
    }
    if (!is_symbol(cp)) continue;
    if (keep_hashmark && cp == U'#') continue;
    if (is_joiner(cp) && i > 0 && i + 1 < orig.size() &&
        is_word_char(orig[i - 1]) && is_word_char(orig[i + 1])) {
      continue;
    }
    s[i] = U' ';
  }
}

char32_t lower_latin(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

std::string collapse_spaces(const std::u32string& s) {
  std::u32string out;
  out.reserve(s.size());
  bool pending = false;
  for (char32_t cp : s) {
    if (is_unicode_space(cp)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(cp);
  }
  return utf8_encode(out);
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool is_symbol(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  if (cp >= 0xA1 && cp <= 0xBF) return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp == 0x0964 || cp == 0x0965 || cp == 0x0970) return true;  // dandas
  if (cp >= 0x2010 && cp <= 0x2027) return true;
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;
  if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
  if (cp >= 0x3001 && cp <= 0x303F) return true;
  if (cp >= 0xFE10 && cp <= 0xFE1F) return true;
  if (cp >= 0xFE30 && cp <= 0xFE6F) return true;
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
    return true;
  }
  if (cp == 0xFFFD) return true;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;
  return false;
}

std::vector<CodepointRange> default_emoji_ranges() {
  return {
      {0x1F600, 0x1F64F},  // emoticons
      {0x1F300, 0x1F5FF},  // misc symbols and pictographs
      {0x1F680, 0x1F6FF},  // transport and map
      {0x1F900, 0x1F9FF},  // supplemental symbols and pictographs
      {0x1FA70, 0x1FAFF},  // symbols and pictographs extended-A
      {0x2600, 0x26FF},    // misc symbols
      {0x2700, 0x27BF},    // dingbats
      {0x1F1E6, 0x1F1FF},  // regional indicators
      {0xFE00, 0xFE0F},    // variation selectors
      {0x200D, 0x200D},    // zero width joiner
      {0x20E3, 0x20E3},    // combining enclosing keycap
      {0xE0020, 0xE007F},  // tag characters
  };
}

std::vector<CodepointRange> load_emoji_ranges(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open emoji range table " + path);
  std::vector<CodepointRange> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view body = trim_view(line);
    if (body.empty()) continue;
    try {
      const auto dash = body.find_first_of("-.");
      CodepointRange r;
      if (dash == std::string_view::npos) {
        r.lo = r.hi = static_cast<char32_t>(std::stoul(std::string(body), nullptr, 16));
      } else {
        std::string_view hi = body.substr(dash + 1);
        while (!hi.empty() && hi.front() == '.') hi.remove_prefix(1);
        r.lo = static_cast<char32_t>(std::stoul(std::string(trim_view(body.substr(0, dash))), nullptr, 16));
        r.hi = static_cast<char32_t>(std::stoul(std::string(trim_view(hi)), nullptr, 16));
      }
      if (r.hi < r.lo) throw ConfigError("inverted range");
      out.push_back(r);
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": bad codepoint range '" + std::string(body) + "'");
    }
  }
  return out;
}

std::string clean(std::string_view text, const PreprocessConfig& config) {
  std::u32string s = utf8_decode(text);
  if (config.strip_html) strip_markup(s);
  if (config.strip_urls) strip_urls(s);
  if (config.strip_mentions) strip_mentions(s);
  if (config.strip_hashmark) {
    for (char32_t& cp : s) {
      if (cp == U'#') cp = U' ';
    }
  }
  for (char32_t& cp : s) {
    if (in_ranges(cp, config.emoji_ranges)) cp = U' ';
  }
  strip_symbols(s, !config.strip_hashmark);
  if (config.lowercase_latin) {
    for (char32_t& cp : s) cp = lower_latin(cp);
  }
  return collapse_spaces(s);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::u32string s = utf8_decode(text);
  strip_symbols(s, false);
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t cp : s) {
    if (is_unicode_space(cp)) {
      if (!current.empty()) tokens.push_back(utf8_encode(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(utf8_encode(current));
  return tokens;
}

StopwordSet load_stopword_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("stopword file not found: " + path);
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view w = trim_view(line);
    if (w.empty() || w.front() == '#') continue;
    words.emplace(w);
  }
  if (words.empty()) throw ConfigError("stopword file is empty: " + path);
  return words;
}

Stopwords Stopwords::from_config(const PreprocessConfig& config) {
  Stopwords sw;
  for (const auto& [lang, path] : config.stopword_files) {
    sw.set(lang, load_stopword_file(path));
  }
  return sw;
}

const StopwordSet& Stopwords::list(Language lang) const {
  auto it = lists_.find(lang);
  if (it == lists_.end()) {
    throw ConfigError("no stopword list configured for language " +
                      std::string(to_string(lang)));
  }
  return it->second;
}

std::vector<std::string> Stopwords::remove(const std::vector<std::string>& tokens,
                                           Language lang) const {
  const StopwordSet& words = list(lang);
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!words.count(t)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> preprocess(std::string_view text, Language lang,
                                    const PreprocessConfig& config,
                                    const Stopwords& stopwords) {
  return stopwords.remove(tokenize(clean(text, config)), lang);
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kOovToken));
}

std::int32_t Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOovIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::int32_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] =
      index_.try_emplace(token, static_cast<std::int32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("write failed for " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Vocabulary v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (n < 2) {
      if (line != (n == 0 ? kPadToken : kOovToken)) {
        throw ParseError(path + ": first two entries must be " +
                         std::string(kPadToken) + " and " + std::string(kOovToken));
      }
    } else if (!line.empty()) {
      if (v.contains(line)) throw ParseError(path + ": duplicate token " + line);
      v.add(line);
    }
    ++n;
  }
  if (n < 2) throw ParseError(path + ": truncated vocabulary");
  return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t min_frequency) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& tok : doc) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  entries.reserve(counts.size());
  for (auto& [tok, n] : counts) {
    if (n >= min_frequency && tok != kPadToken && tok != kOovToken) {
      entries.emplace_back(tok, n);
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.min_frequency_ = min_frequency;
  for (const auto& [tok, n] : entries) v.add(tok);
  return v;
}

EncodedSequence encode(const std::vector<std::string>& tokens,
                       const Vocabulary& vocab, std::size_t max_len) {
  EncodedSequence seq;
  seq.indices.assign(max_len, kPadIndex);
  seq.true_length = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    seq.indices[i] = vocab.index_of(tokens[i]);
  }
  return seq;
}

}  // namespace abusenet
