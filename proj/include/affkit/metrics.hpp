#pragma once

// Segmentation metrics over integer label maps. Label -1 is background.

#include <cstdint>
#include <vector>

namespace affkit {

inline constexpr int kBackground = -1;

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major, values in [-1, L)

  LabelMap() = default;
  LabelMap(int w, int h, int fill = kBackground)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}
  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
  int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

struct LabelCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct Metrics {
  double miou = 0.0;
  double f1 = 0.0;
  double acc = 0.0;
  // Per label; only meaningful where present[l] is true.
  std::vector<double> iou;
  std::vector<double> f1_per_label;
  std::vector<bool> present;
};

// One-vs-rest confusion counts per label plus the foreground accuracy tally.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int num_labels);

  void add(const LabelMap& pred, const LabelMap& gt);
  void merge(const ConfusionAccumulator& other);

  int num_labels() const { return static_cast<int>(counts_.size()); }
  const LabelCounts& counts(int label) const { return counts_[static_cast<std::size_t>(label)]; }
  std::int64_t foreground_correct() const { return fg_correct_; }
  std::int64_t foreground_total() const { return fg_total_; }
  // Labels with at least one ground-truth pixel contribute to the averages.
  Metrics metrics() const;

 private:
  std::vector<LabelCounts> counts_;
  std::int64_t fg_correct_ = 0;
  std::int64_t fg_total_ = 0;
};

Metrics compute_metrics(const LabelMap& pred, const LabelMap& gt, int num_labels);

// Per-image metrics averaged over images; per-label values over the images
// that contain the label.
class MacroAverage {
 public:
  explicit MacroAverage(int num_labels);
  void add(const Metrics& m);
  int images() const { return images_; }
  Metrics mean() const;

 private:
  int images_ = 0;
  double miou_ = 0.0, f1_ = 0.0, acc_ = 0.0;
  std::vector<double> iou_, f1_label_;
  std::vector<int> label_images_;
};

}  // namespace affkit
