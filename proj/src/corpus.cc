#include "abusenet/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "abusenet/csv.h"
#include "abusenet/error.h"
#include "abusenet/rng.h"

namespace abusenet {
namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

int parse_key(std::string_view raw) {
  const std::string s = lower_ascii(trim(raw));
  if (s == "question_1") return 1;
  if (s == "question_2") return 2;
  if (s == "question_3") return 3;
  throw ParseError("unknown key '" + std::string(raw) + "'");
}

struct AnnotatorColumn {
  Language language;
  int number;
  std::size_t column;
};

std::vector<AnnotatorColumn> find_annotator_columns(
    const std::vector<std::string>& header) {
  std::vector<AnnotatorColumn> out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lower_ascii(trim(header[i]));
    if (h.size() < 5 || h[2] != '_' || h[3] != 'a') continue;
    Language lang;
    const std::string prefix = h.substr(0, 2);
    if (prefix == "en") {
      lang = Language::kEn;
    } else if (prefix == "hi") {
      lang = Language::kHi;
    } else if (prefix == "ta") {
      lang = Language::kTa;
    } else {
      continue;
    }
    const std::string digits = h.substr(4);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      continue;
    }
    const int number = std::stoi(digits);
    if (number < 1 || static_cast<std::size_t>(number) > annotator_slots(lang)) {
      throw SchemaError("annotator column '" + header[i] +
                        "' exceeds the group size for its language");
    }
    out.push_back({lang, number, i});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::pair(static_cast<int>(a.language), a.number) <
           std::pair(static_cast<int>(b.language), b.number);
  });
  return out;
}

std::size_t require_column_ci(const CsvTable& table, std::string_view name) {
  const auto& header = table.header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (lower_ascii(trim(header[i])) == name) return i;
  }
  throw SchemaError(table.source_name() + ": missing required column '" +
                    std::string(name) + "'");
}

}  // namespace

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::kEn: return "en";
    case Language::kHi: return "hi";
    case Language::kTa: return "ta";
  }
  return "?";
}

std::string_view to_string(Source src) {
  switch (src) {
    case Source::kUli: return "uli";
    case Source::kMacd: return "macd";
    case Source::kMultilate: return "multilate";
  }
  return "?";
}

Language parse_language(std::string_view s) {
  const std::string v = lower_ascii(trim(s));
  if (v == "en" || v == "english") return Language::kEn;
  if (v == "hi" || v == "hindi") return Language::kHi;
  if (v == "ta" || v == "tamil") return Language::kTa;
  throw ParseError("unknown language '" + std::string(s) + "'");
}

Source parse_source(std::string_view s) {
  const std::string v = lower_ascii(trim(s));
  if (v == "uli") return Source::kUli;
  if (v == "macd") return Source::kMacd;
  if (v == "multilate") return Source::kMultilate;
  throw ParseError("unknown source '" + std::string(s) + "'");
}

Vote decode_vote(std::string_view cell) {
  const std::string_view v = trim(cell);
  if (v == "1" || v == "1.0") return Vote::kAgree;
  if (v == "0" || v == "0.0") return Vote::kDisagree;
  if (v == "NL") return Vote::kNotAnnotated;
  if (v.empty() || v == "NaN" || v == "nan") return Vote::kNotAssigned;
  throw ParseError("undecodable vote cell '" + std::string(cell) + "'");
}

std::size_t annotator_slots(Language lang) {
  return lang == Language::kHi ? 5 : 6;
}

std::vector<RawAnnotationRow> parse_uli_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_uli_stream(in, path);
}

std::vector<RawAnnotationRow> parse_uli_stream(std::istream& in,
                                               const std::string& name) {
  const CsvTable table = CsvTable::read_stream(in, name);
  const std::size_t id_col = table.require_column("id");
  const std::size_t text_col = table.require_column("text");
  const std::size_t lang_col = table.require_column("language");
  const std::size_t key_col = table.require_column("key");
  const auto annotators = find_annotator_columns(table.header());
  if (annotators.empty()) {
    throw SchemaError(name + ": missing required column 'en_a1' (no annotator columns found)");
  }

  std::vector<RawAnnotationRow> rows;
  rows.reserve(table.rows().size());
  for (const CsvRecord& rec : table.rows()) {
    RawAnnotationRow row;
    row.line = rec.line;
    row.id = std::string(trim(rec.fields[id_col]));
    row.text = rec.fields[text_col];
    try {
      row.language = parse_language(rec.fields[lang_col]);
      row.key = parse_key(rec.fields[key_col]);
      for (const AnnotatorColumn& a : annotators) {
        if (a.language != row.language) continue;
        const Vote v = decode_vote(rec.fields[a.column]);
        if (v != Vote::kNotAssigned) row.votes.emplace_back(a.number, v);
      }
    } catch (const ParseError& e) {
      throw ParseError(where(name, rec.line) + ": row id " + row.id + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<int> aggregate_label(const std::vector<Vote>& votes) {
  std::size_t agree = 0;
  std::size_t disagree = 0;
  for (Vote v : votes) {
    if (v == Vote::kAgree) ++agree;
    if (v == Vote::kDisagree) ++disagree;
  }
  if (agree == 0 && disagree == 0) return std::nullopt;
  return agree >= disagree ? 1 : 0;
}

std::vector<LabeledExample> assemble_examples(
    const std::vector<RawAnnotationRow>& rows, const std::set<int>& keys,
    AssembleStats* stats) {
  for (int k : keys) {
    if (k < 1 || k > 3) throw ConfigError("task key must be in 1..3");
  }
  struct Group {
    const RawAnnotationRow* first = nullptr;
    std::map<int, const RawAnnotationRow*> by_key;
  };
  std::vector<Group> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const RawAnnotationRow& row : rows) {
    auto [it, inserted] = index.try_emplace(row.id, groups.size());
    if (inserted) groups.push_back({&row, {}});
    Group& g = groups[it->second];
    if (!g.by_key.emplace(row.key, &row).second) {
      throw DataError("duplicate (id, key) pair: id " + row.id + ", question_" +
                      std::to_string(row.key) + " (line " +
                      std::to_string(row.line) + ")");
    }
  }

  std::vector<LabeledExample> out;
  std::size_t dropped = 0;
  for (const Group& g : groups) {
    LabeledExample ex;
    ex.id = g.first->id;
    ex.text = g.first->text;
    ex.language = g.first->language;
    ex.source = Source::kUli;
    bool complete = true;
    for (int key : keys) {
      auto it = g.by_key.find(key);
      if (it == g.by_key.end()) {
        complete = false;
        break;
      }
      std::vector<Vote> votes;
      for (const auto& [annotator, vote] : it->second->votes) votes.push_back(vote);
      const auto label = aggregate_label(votes);
      if (!label) {
        complete = false;
        break;
      }
      ex.labels[key] = *label;
    }
    if (complete) {
      out.push_back(std::move(ex));
    } else {
      ++dropped;
    }
  }
  if (stats) {
    stats->groups = groups.size();
    stats->dropped_unlabeled = dropped;
  }
  return out;
}

int remap_macd_label(int raw) {
  if (raw != 0 && raw != 1) throw ParseError("MACD label must be 0 or 1");
  return 1 - raw;
}

std::vector<LabeledExample> load_external(const std::string& path,
                                          Source source, Language language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_external_stream(in, path, source, language);
}

std::vector<LabeledExample> load_external_stream(std::istream& in,
                                                 const std::string& name,
                                                 Source source,
                                                 Language language) {
  if (source == Source::kUli) {
    throw ConfigError("load_external expects an external source (macd or multilate)");
  }
  if (source == Source::kMultilate && language != Language::kEn) {
    throw ConfigError("MULTILATE is an English dataset");
  }
  const CsvTable table = CsvTable::read_stream(in, name);
  const std::size_t text_col = require_column_ci(table, "text");
  const std::size_t label_col = require_column_ci(table, "label");
  std::vector<LabeledExample> out;
  out.reserve(table.rows().size());
  std::size_t row_index = 0;
  for (const CsvRecord& rec : table.rows()) {
    const std::string_view raw = trim(rec.fields[label_col]);
    int label = -1;
    if (source == Source::kMacd) {
      if (raw == "0" || raw == "0.0") label = remap_macd_label(0);
      if (raw == "1" || raw == "1.0") label = remap_macd_label(1);
    } else {
      if (raw == "Hate") label = 1;
      if (raw == "Not-Hate") label = 0;
    }
    if (label < 0) {
      throw ParseError(where(name, rec.line) + ": row " + std::to_string(row_index) +
                       ": unknown label value '" + std::string(raw) + "'");
    }
    LabeledExample ex;
    ex.id = std::string(to_string(source)) + ":" + std::to_string(row_index);
    ex.text = rec.fields[text_col];
    ex.language = language;
    ex.labels[1] = label;
    ex.source = source;
    out.push_back(std::move(ex));
    ++row_index;
  }
  return out;
}

std::vector<LabeledExample> merge_external(
    const std::vector<LabeledExample>& base,
    const std::vector<LabeledExample>& extra) {
  std::optional<Language> lang;
  for (const auto* list : {&base, &extra}) {
    for (const LabeledExample& ex : *list) {
      if (!lang) lang = ex.language;
      if (ex.language != *lang) {
        throw ConfigError("language mismatch while merging external data: " +
                          std::string(to_string(*lang)) + " vs " +
                          std::string(to_string(ex.language)));
      }
      if (!ex.labels.count(1)) {
        throw ConfigError("merged examples must carry label 1");
      }
    }
  }
  std::vector<LabeledExample> out;
  out.reserve(base.size() + extra.size());
  out.insert(out.end(), base.begin(), base.end());
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

namespace {

std::size_t train_count(std::size_t n, double ratio) {
  auto t = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * ratio - 1e-9));
  return std::clamp<std::size_t>(t, 1, n - 1);
}

}  // namespace

DatasetSplit split_train_test(const std::vector<LabeledExample>& examples,
                              double ratio, std::uint64_t seed,
                              std::optional<int> stratify_label) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1)");
  }
  if (examples.size() < 2) throw ConfigError("need at least 2 examples to split");

  Rng rng(seed);
  DatasetSplit split;
  split.seed = seed;
  split.ratio = ratio;

  if (!stratify_label) {
    std::vector<std::size_t> perm(examples.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    const std::size_t n_train = train_count(perm.size(), ratio);
    split.train_indices.assign(perm.begin(), perm.begin() + n_train);
    split.test_indices.assign(perm.begin() + n_train, perm.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      auto it = examples[i].labels.find(*stratify_label);
      if (it == examples[i].labels.end()) {
        throw ConfigError("stratification label missing on an example");
      }
      by_class[it->second].push_back(i);
    }
    for (auto& [cls, members] : by_class) {
      rng.shuffle(members);
      std::size_t n_train = members.size() < 2
                                ? members.size()
                                : train_count(members.size(), ratio);
      split.train_indices.insert(split.train_indices.end(), members.begin(),
                                 members.begin() + n_train);
      split.test_indices.insert(split.test_indices.end(),
                                members.begin() + n_train, members.end());
    }
    rng.shuffle(split.train_indices);
    rng.shuffle(split.test_indices);
  }
  for (std::size_t i : split.train_indices) split.train.push_back(examples[i]);
  for (std::size_t i : split.test_indices) split.test.push_back(examples[i]);
  return split;
}

FoldAssignment kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (n < k) {
    throw ConfigError("cannot build " + std::to_string(k) + " folds from " +
                      std::to_string(n) + " examples");
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  rng.shuffle(perm);

  FoldAssignment fa;
  fa.k = k;
  fa.membership.assign(n, 0);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fa.membership[perm[pos++]] = f;
  }
  return fa;
}

std::vector<std::size_t> FoldAssignment::fold_members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t f : membership) ++sizes[f];
  return sizes;
}

void write_dataset_jsonl(const std::string& path,
                         const std::vector<LabeledExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const LabeledExample& ex : examples) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["text"] = ex.text;
    j["language"] = to_string(ex.language);
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ex.labels) labels[std::to_string(k)] = v;
    j["labels"] = labels;
    j["source"] = to_string(ex.source);
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<LabeledExample> read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LabeledExample ex;
      ex.id = j.value("id", std::to_string(out.size()));
      ex.text = j.at("text").get<std::string>();
      ex.language = parse_language(j.at("language").get<std::string>());
      for (const auto& [k, v] : j.at("labels").items()) {
        const int label = v.get<int>();
        if (label != 0 && label != 1) throw ParseError("label must be 0 or 1");
        ex.labels[std::stoi(k)] = label;
      }
      ex.source = parse_source(j.at("source").get<std::string>());
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where(path, line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(where(path, line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace abusenet
