#ifndef ABUSENET_METRICS_H_
#define ABUSENET_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

namespace abusenet {

// Entry (g, p) counts examples with gold class g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2)
      : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t gold, std::size_t pred) const {
    return counts_[gold * classes_ + pred];
  }
  void add(std::size_t gold, std::size_t pred) { ++counts_[gold * classes_ + pred]; }
  std::uint64_t total() const;

  // For class c: TP = M[c,c], FP = column c - TP, FN = row c - TP,
  // TN = total - TP - FP - FN.
  std::uint64_t tp(std::size_t c) const { return at(c, c); }
  std::uint64_t fp(std::size_t c) const;
  std::uint64_t fn(std::size_t c) const;
  std::uint64_t tn(std::size_t c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

// Throws DataError on length mismatch or labels outside [0, classes).
ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds,
                          std::size_t classes);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Number of zero denominators replaced by 0 (0, 1 or 2).
  int zero_divisions = 0;
};

PrecisionRecall per_class_pr(const ConfusionMatrix& m, std::size_t c);

struct MacroAverages {
  double map = 0.0;  // macro-averaged precision
  double mar = 0.0;  // macro-averaged recall
};

// Unweighted mean over all classes.
MacroAverages macro_average(const ConfusionMatrix& m);

// Binary form: positive class 1 uses TP/FP/FN, negative class uses
// TN/(TN+FN) and TN/(TN+FP). Requires a 2x2 matrix.
MacroAverages macro_average_binary(const ConfusionMatrix& m, std::size_t positive = 1);

// Harmonic mean of MAP and MAR; 0 when both are 0.
double macro_f1(double map, double mar);

struct ClassificationReport {
  ConfusionMatrix matrix{2};
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::uint64_t> support;
  double map = 0.0;
  double mar = 0.0;
  double macro_f1 = 0.0;
  // Mean of per-class F1 scores, the definition most toolkits use. Reported
  // alongside for comparison only.
  double mean_class_f1 = 0.0;
  double accuracy = 0.0;
  int zero_division_warnings = 0;
};

ClassificationReport classification_report(const ConfusionMatrix& m);
ClassificationReport classification_report(const std::vector<int>& golds,
                                           const std::vector<int>& preds,
                                           std::size_t classes = 2);

nlohmann::ordered_json to_json(const ClassificationReport& report);

}  // namespace abusenet

#endif  // ABUSENET_METRICS_H_
