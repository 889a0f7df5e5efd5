#ifndef ABUSENET_CORPUS_H_
#define ABUSENET_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace abusenet {

enum class Language { kEn, kHi, kTa };
enum class Source { kUli, kMacd, kMultilate };

// Annotator cell values: "1", "0", "NL", and empty/NaN.
enum class Vote { kAgree, kDisagree, kNotAnnotated, kNotAssigned };

std::string_view to_string(Language lang);
std::string_view to_string(Source src);
Language parse_language(std::string_view s);  // en/hi/ta or English/Hindi/Tamil
Source parse_source(std::string_view s);

// Decodes one annotator cell. Throws ParseError for unknown values.
Vote decode_vote(std::string_view cell);

// Maximum annotator columns per language group (en_a1..6, hi_a1..5, ta_a1..6).
std::size_t annotator_slots(Language lang);

struct RawAnnotationRow {
  std::string id;
  std::string text;
  Language language = Language::kEn;
  int key = 1;  // question_1 .. question_3
  std::vector<std::pair<int, Vote>> votes;  // (annotator number, vote)
  std::size_t line = 0;
};

struct LabeledExample {
  std::string id;
  std::string text;
  Language language = Language::kEn;
  std::map<int, int> labels;  // task label number -> {0, 1}
  Source source = Source::kUli;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::vector<std::size_t> train_indices;  // positions in the input list
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> membership;  // fold index per example

  std::vector<std::size_t> fold_members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Reads the multi-annotator CSV. Requires id, text, language and key columns
// plus at least one annotator column. Only the annotator group matching a
// row's language contributes votes; cells in other groups are ignored.
std::vector<RawAnnotationRow> parse_uli_csv(const std::string& path);
std::vector<RawAnnotationRow> parse_uli_stream(std::istream& in,
                                               const std::string& name);

// Strict majority of Agree vs Disagree; ties with at least one countable vote
// give 1; no countable votes gives nullopt.
std::optional<int> aggregate_label(const std::vector<Vote>& votes);

struct AssembleStats {
  std::size_t groups = 0;
  std::size_t dropped_unlabeled = 0;
};

// Groups rows by id (first-appearance order) and attaches the aggregated label
// of every requested key. Groups missing any requested label are dropped.
std::vector<LabeledExample> assemble_examples(
    const std::vector<RawAnnotationRow>& rows, const std::set<int>& keys,
    AssembleStats* stats = nullptr);

// MACD: text + label in {0,1} with 0 meaning abusive (remapped to 1).
// MULTILATE: text + label in {Hate, Not-Hate}.
std::vector<LabeledExample> load_external(const std::string& path,
                                          Source source, Language language);
std::vector<LabeledExample> load_external_stream(std::istream& in,
                                                 const std::string& name,
                                                 Source source,
                                                 Language language);

// MACD polarity flip. Applying it twice is the identity.
int remap_macd_label(int raw);

std::vector<LabeledExample> merge_external(
    const std::vector<LabeledExample>& base,
    const std::vector<LabeledExample>& extra);

// Seeded shuffle then partition; test gets floor(n * (1 - ratio)) examples.
// When stratify_label is set the split is done per class of that label.
DatasetSplit split_train_test(const std::vector<LabeledExample>& examples,
                              double ratio, std::uint64_t seed,
                              std::optional<int> stratify_label = std::nullopt);

FoldAssignment kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

// Canonical dataset file: one JSON object per line.
void write_dataset_jsonl(const std::string& path,
                         const std::vector<LabeledExample>& examples);
std::vector<LabeledExample> read_dataset_jsonl(const std::string& path);

}  // namespace abusenet

#endif  // ABUSENET_CORPUS_H_
