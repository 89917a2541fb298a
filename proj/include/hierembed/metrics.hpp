#ifndef HIEREMBED_METRICS_HPP
#define HIEREMBED_METRICS_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace hierembed {

/// Per-label confusion counts. Rates with a zero denominator are reported as 0.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

[[nodiscard]] PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);

struct Rates {
  double tpr = 0.0;
  double tnr = 0.0;
};

[[nodiscard]] Rates tpr_tnr(const ConfusionCounts& c);

/// Fraction of samples whose truth is among the first k entries of its ranking.
/// k is clamped to the ranking length.
[[nodiscard]] double hit_at_k(std::span<const std::vector<std::uint32_t>> rankings,
                              std::span<const std::uint32_t> truth, std::size_t k);

enum class Averaging { macro, micro };
enum class Metric { precision, recall, f1, tpr, tnr };

[[nodiscard]] double metric_of(const ConfusionCounts& c, Metric m);

/// macro: unweighted mean of per-label metrics; micro: metric of the summed counts.
[[nodiscard]] double aggregate(std::span<const ConfusionCounts> per_label, Metric m, Averaging mode);

/// One-vs-rest counts for single-label predictions over `classes` labels.
[[nodiscard]] std::vector<ConfusionCounts> single_label_counts(std::span<const std::uint32_t> predicted,
                                                               std::span<const std::uint32_t> truth,
                                                               std::size_t classes);

}  // namespace hierembed

#endif  // HIEREMBED_METRICS_HPP
