#include "abusenet/metrics.h"

#include <numeric>

#include "abusenet/error.h"

namespace abusenet {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::fp(std::size_t c) const {
  std::uint64_t col = 0;
  for (std::size_t g = 0; g < classes_; ++g) col += at(g, c);
  return col - tp(c);
}

std::uint64_t ConfusionMatrix::fn(std::size_t c) const {
  std::uint64_t row = 0;
  for (std::size_t p = 0; p < classes_; ++p) row += at(c, p);
  return row - tp(c);
}

std::uint64_t ConfusionMatrix::tn(std::size_t c) const {
  return total() - tp(c) - fp(c) - fn(c);
}

ConfusionMatrix confusion(const std::vector<int>& golds, const std::vector<int>& preds,
                          std::size_t classes) {
  if (golds.size() != preds.size()) {
    throw DataError("gold and prediction lists differ in length (" +
                    std::to_string(golds.size()) + " vs " +
                    std::to_string(preds.size()) + ")");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int g = golds[i], p = preds[i];
    if (g < 0 || p < 0 || static_cast<std::size_t>(g) >= classes ||
        static_cast<std::size_t>(p) >= classes) {
      throw DataError("label out of range at position " + std::to_string(i));
    }
    m.add(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
  }
  return m;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, int& zero_divisions) {
  if (den == 0) {
    ++zero_divisions;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PrecisionRecall per_class_pr(const ConfusionMatrix& m, std::size_t c) {
  PrecisionRecall pr;
  const std::uint64_t tp = m.tp(c);
  pr.precision = ratio(tp, tp + m.fp(c), pr.zero_divisions);
  pr.recall = ratio(tp, tp + m.fn(c), pr.zero_divisions);
  return pr;
}

MacroAverages macro_average(const ConfusionMatrix& m) {
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    const PrecisionRecall pr = per_class_pr(m, c);
    p_sum += pr.precision;
    r_sum += pr.recall;
  }
  const double n = static_cast<double>(m.classes());
  return {p_sum / n, r_sum / n};
}

MacroAverages macro_average_binary(const ConfusionMatrix& m, std::size_t positive) {
  if (m.classes() != 2 || positive > 1) {
    throw DataError("binary macro average needs a 2x2 confusion matrix");
  }
  const std::uint64_t tp = m.tp(positive), fp = m.fp(positive);
  const std::uint64_t fn = m.fn(positive), tn = m.tn(positive);
  int unused = 0;
  const double p_pos = ratio(tp, tp + fp, unused);
  const double r_pos = ratio(tp, tp + fn, unused);
  const double p_neg = ratio(tn, tn + fn, unused);
  const double r_neg = ratio(tn, tn + fp, unused);
  // Summed in class-index order so the result is bit-identical to
  // macro_average on the same matrix.
  const double p_sum = positive == 1 ? p_neg + p_pos : p_pos + p_neg;
  const double r_sum = positive == 1 ? r_neg + r_pos : r_pos + r_neg;
  return {p_sum / 2.0, r_sum / 2.0};
}

double macro_f1(double map, double mar) {
  const double denom = map + mar;
  if (denom == 0.0) return 0.0;
  return 2.0 * (map * mar) / denom;
}

ClassificationReport classification_report(const ConfusionMatrix& m) {
  ClassificationReport r;
  r.matrix = m;
  const std::size_t C = m.classes();
  double f1_sum = 0.0;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const PrecisionRecall pr = per_class_pr(m, c);
    r.precision.push_back(pr.precision);
    r.recall.push_back(pr.recall);
    r.zero_division_warnings += pr.zero_divisions;
    const double f1 = macro_f1(pr.precision, pr.recall);
    r.f1.push_back(f1);
    f1_sum += f1;
    r.support.push_back(m.tp(c) + m.fn(c));
    correct += m.tp(c);
  }
  const MacroAverages avg = macro_average(m);
  r.map = avg.map;
  r.mar = avg.mar;
  r.macro_f1 = macro_f1(avg.map, avg.mar);
  r.mean_class_f1 = C ? f1_sum / static_cast<double>(C) : 0.0;
  const std::uint64_t total = m.total();
  r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

ClassificationReport classification_report(const std::vector<int>& golds,
                                           const std::vector<int>& preds,
                                           std::size_t classes) {
  return classification_report(confusion(golds, preds, classes));
}

nlohmann::ordered_json to_json(const ClassificationReport& r) {
  nlohmann::ordered_json j;
  j["precision_macro"] = r.map;
  j["recall_macro"] = r.mar;
  j["f1_macro"] = r.macro_f1;
  j["f1_mean_per_class"] = r.mean_class_f1;
  j["accuracy"] = r.accuracy;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.precision.size(); ++c) {
    classes.push_back({{"class", c},
                       {"precision", r.precision[c]},
                       {"recall", r.recall[c]},
                       {"f1", r.f1[c]},
                       {"support", r.support[c]}});
  }
  j["per_class"] = classes;
  nlohmann::ordered_json matrix = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < r.matrix.classes(); ++g) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < r.matrix.classes(); ++p) row.push_back(r.matrix.at(g, p));
    matrix.push_back(row);
  }
  j["confusion_matrix"] = matrix;
  j["zero_division_warnings"] = r.zero_division_warnings;
  return j;
}

}  // namespace abusenet
