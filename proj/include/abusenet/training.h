#ifndef ABUSENET_TRAINING_H_
#define ABUSENET_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abusenet/corpus.h"
#include "abusenet/metrics.h"
#include "abusenet/model.h"
#include "abusenet/text.h"

namespace abusenet {

enum class EnsembleMode { kAverage, kBestFold };

struct TrainConfig {
  int task = 1;
  Language language = Language::kEn;
  std::size_t folds = 5;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  AdamConfig adam;
  std::uint64_t seed = 42;
  // Task 3 only: one two-head model (true) or one single-head model per label.
  bool multitask = true;
  EnsembleMode ensemble = EnsembleMode::kAverage;
  std::size_t threads = 1;

  // Batch 32 / 5 epochs for Tasks 1 and 3, batch 64 / 7 epochs for Task 2.
  static TrainConfig defaults_for_task(int task);
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
// Unknown keys are rejected. Keys not present take the task defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

// Label ids predicted by each model head for a task: {1} or {1, 3}.
std::vector<int> task_labels(int task);

// Fixed-length index sequences plus per-head integer labels.
struct EncodedDataset {
  std::size_t seq_len = 0;
  std::vector<std::int32_t> indices;     // N x seq_len
  std::vector<std::vector<int>> labels;  // [head][example]

  std::size_t size() const { return seq_len ? indices.size() / seq_len : 0; }
  std::size_t heads() const { return labels.size(); }
  Tensor<std::int32_t> batch(const std::vector<std::size_t>& rows) const;
  std::vector<int> head_labels(std::size_t head, const std::vector<std::size_t>& rows) const;
  // Restricts to the given heads, in the given order.
  EncodedDataset select_heads(const std::vector<std::size_t>& heads) const;
};

// Encodes examples into a dataset whose heads follow `label_ids`. Examples
// missing a requested label raise DataError.
EncodedDataset encode_examples(const std::vector<std::vector<std::string>>& tokens,
                               const std::vector<LabeledExample>& examples,
                               const std::vector<int>& label_ids,
                               const Vocabulary& vocab, std::size_t seq_len);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct FoldReport {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::vector<EpochRecord> epochs;
  std::vector<ClassificationReport> heads;  // on the validation fold
};

struct HeadSummary {
  int label = 1;
  double precision = 0.0;  // mean over folds of MAP
  double recall = 0.0;     // mean over folds of MAR
  double f1 = 0.0;         // mean over folds of macro-F1
  double mean_class_f1 = 0.0;
  double accuracy = 0.0;
};

struct RunReport {
  std::vector<int> label_ids;
  std::vector<FoldReport> folds;
  std::vector<HeadSummary> averaged;
  nlohmann::ordered_json config;  // snapshot of everything that shaped the run
  std::size_t vocab_size = 0;
  double embedding_coverage = 0.0;
  // Fold-ensemble scores on the held-out partition, when one was evaluated.
  std::vector<ClassificationReport> holdout;
};

nlohmann::ordered_json to_json(const RunReport& report);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;  // mean over heads
  std::size_t steps = 0;
};

// One shuffled pass with one Adam step per batch; the last partial batch is
// trained. Throws NumericError on a non-finite loss. `on_batch` sees the
// example rows of every batch.
EpochStats train_epoch(Network<float>& net, const EncodedDataset& data,
                       const std::vector<std::size_t>& rows, std::size_t batch_size,
                       const AdamConfig& adam, Rng& rng,
                       const std::function<void(const std::vector<std::size_t>&)>& on_batch = {});

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<int>> predictions;  // [head][row]
};

EvalResult evaluate(Network<float>& net, const EncodedDataset& data,
                    const std::vector<std::size_t>& rows, std::size_t batch_size);

struct CvOptions {
  std::ostream* log = nullptr;
  // Called with (fold, rows) for every training batch.
  std::function<void(std::size_t, const std::vector<std::size_t>&)> on_batch;
};

struct CvResult {
  RunReport report;
  std::vector<Network<float>> models;  // one per fold
};

// k-fold cross-validation: a fresh model per fold (seeded per fold), trained
// on the other k-1 folds and scored on the held-out fold.
CvResult run_cv(const EncodedDataset& data, const ModelConfig& model_config,
                const TrainConfig& config, std::shared_ptr<const EmbeddingTable> table,
                const CvOptions& options = {});

struct EnsembleOutput {
  std::vector<std::vector<int>> labels;    // [head][row]
  std::vector<std::vector<double>> probs;  // [head][row * classes + c]
};

// Averages per-head softmax outputs over the models, then argmax with ties
// going to class 1. Throws ConfigError if the models disagree on architecture.
EnsembleOutput ensemble_predict(std::vector<Network<float>>& models,
                                const Tensor<std::int32_t>& sequences,
                                std::size_t batch_size = 256);

// Index of the fold whose validation macro-F1 (averaged over heads) is best.
std::size_t best_fold(const RunReport& report);

// fold,epoch,train_loss,train_acc,val_loss,val_acc - one row per fold and epoch.
void emit_curves(const RunReport& report, const std::string& out_path);
// Same columns with fold = "mean", averaged across folds per epoch.
void emit_mean_curves(const RunReport& report, const std::string& out_path);
// Accuracy and loss panels; one file per fold plus one for the mean series.
void emit_curve_svgs(const RunReport& report, const std::string& dir);

struct CurveRow {
  std::size_t fold = 0;
  EpochRecord record;
};
std::vector<CurveRow> read_curves(const std::string& path);

}  // namespace abusenet

#endif  // ABUSENET_TRAINING_H_
