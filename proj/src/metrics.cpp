#include "hierembed/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace hierembed {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 out;
  out.precision = ratio(c.tp, c.tp + c.fp);
  out.recall = ratio(c.tp, c.tp + c.fn);
  const double sum = out.precision + out.recall;
  out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
  return out;
}

Rates tpr_tnr(const ConfusionCounts& c) { return {ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp)}; }

double hit_at_k(std::span<const std::vector<std::uint32_t>> rankings, std::span<const std::uint32_t> truth,
                std::size_t k) {
  if (k < 1) throw std::invalid_argument("hit@k requires k >= 1");
  if (rankings.size() != truth.size()) throw std::invalid_argument("hit@k: rankings/truth size mismatch");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size()));
    if (std::find(r.begin(), end, truth[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double metric_of(const ConfusionCounts& c, Metric m) {
  switch (m) {
    case Metric::precision: return precision_recall_f1(c).precision;
    case Metric::recall: return precision_recall_f1(c).recall;
    case Metric::f1: return precision_recall_f1(c).f1;
    case Metric::tpr: return tpr_tnr(c).tpr;
    case Metric::tnr: return tpr_tnr(c).tnr;
  }
  return 0.0;
}

double aggregate(std::span<const ConfusionCounts> per_label, Metric m, Averaging mode) {
  if (per_label.empty()) throw std::invalid_argument("aggregate over an empty label set");
  if (mode == Averaging::micro) {
    ConfusionCounts total;
    for (const auto& c : per_label) total += c;
    return metric_of(total, m);
  }
  double sum = 0.0;
  for (const auto& c : per_label) sum += metric_of(c, m);
  return sum / static_cast<double>(per_label.size());
}

std::vector<ConfusionCounts> single_label_counts(std::span<const std::uint32_t> predicted,
                                                 std::span<const std::uint32_t> truth, std::size_t classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/truth size mismatch");
  std::vector<ConfusionCounts> out(classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= classes || truth[i] >= classes) throw std::out_of_range("label index out of range");
    if (predicted[i] == truth[i]) {
      ++out[truth[i]].tp;
    } else {
      ++out[predicted[i]].fp;
      ++out[truth[i]].fn;
    }
  }
  const auto n = static_cast<std::uint64_t>(predicted.size());
  for (auto& c : out) c.tn = n - c.tp - c.fp - c.fn;
  return out;
}

}  // namespace hierembed
