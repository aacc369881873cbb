#include "affkit/metrics.hpp"

#include "affkit/error.hpp"

namespace affkit {

ConfusionAccumulator::ConfusionAccumulator(int num_labels) {
  if (num_labels < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one label");
  counts_.resize(static_cast<std::size_t>(num_labels));
}

void ConfusionAccumulator::add(const LabelMap& pred, const LabelMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height || pred.labels.size() != gt.labels.size())
    throw Error(ErrorCode::kShapeMismatch, "prediction and ground-truth maps differ in size");
  const int n = num_labels();
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const int p = pred.labels[i], g = gt.labels[i];
    if (p < kBackground || p >= n || g < kBackground || g >= n)
      throw Error(ErrorCode::kInvalidArgument, "label index out of range");
    if (g != kBackground) {
      ++fg_total_;
      if (p == g) ++fg_correct_;
    }
    for (int l = 0; l < n; ++l) {
      auto& c = counts_[static_cast<std::size_t>(l)];
      const bool pp = p == l, gg = g == l;
      if (pp && gg) ++c.tp;
      else if (pp) ++c.fp;
      else if (gg) ++c.fn;
      else ++c.tn;
    }
  }
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.num_labels() != num_labels()) throw Error(ErrorCode::kShapeMismatch, "label counts differ");
  for (std::size_t l = 0; l < counts_.size(); ++l) {
    counts_[l].tp += other.counts_[l].tp;
    counts_[l].fp += other.counts_[l].fp;
    counts_[l].fn += other.counts_[l].fn;
    counts_[l].tn += other.counts_[l].tn;
  }
  fg_correct_ += other.fg_correct_;
  fg_total_ += other.fg_total_;
}

Metrics ConfusionAccumulator::metrics() const {
  Metrics m;
  const auto n = counts_.size();
  m.iou.assign(n, 0.0);
  m.f1_per_label.assign(n, 0.0);
  m.present.assign(n, false);
  int present = 0;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& c = counts_[l];
    if (c.tp + c.fn == 0) continue;
    m.present[l] = true;
    ++present;
    m.iou[l] = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
    m.f1_per_label[l] = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    m.miou += m.iou[l];
    m.f1 += m.f1_per_label[l];
  }
  if (present == 0 || fg_total_ == 0) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth has no foreground pixel");
  m.miou /= present;
  m.f1 /= present;
  m.acc = static_cast<double>(fg_correct_) / static_cast<double>(fg_total_);
  return m;
}

Metrics compute_metrics(const LabelMap& pred, const LabelMap& gt, int num_labels) {
  ConfusionAccumulator acc(num_labels);
  acc.add(pred, gt);
  return acc.metrics();
}

MacroAverage::MacroAverage(int num_labels)
    : iou_(static_cast<std::size_t>(num_labels), 0.0),
      f1_label_(static_cast<std::size_t>(num_labels), 0.0),
      label_images_(static_cast<std::size_t>(num_labels), 0) {}

void MacroAverage::add(const Metrics& m) {
  if (m.iou.size() != iou_.size()) throw Error(ErrorCode::kShapeMismatch, "label counts differ");
  ++images_;
  miou_ += m.miou;
  f1_ += m.f1;
  acc_ += m.acc;
  for (std::size_t l = 0; l < iou_.size(); ++l) {
    if (!m.present[l]) continue;
    iou_[l] += m.iou[l];
    f1_label_[l] += m.f1_per_label[l];
    ++label_images_[l];
  }
}

Metrics MacroAverage::mean() const {
  if (images_ == 0) throw Error(ErrorCode::kEmptyGroundTruth, "no images were scored");
  Metrics m;
  m.miou = miou_ / images_;
  m.f1 = f1_ / images_;
  m.acc = acc_ / images_;
  const auto n = iou_.size();
  m.iou.assign(n, 0.0);
  m.f1_per_label.assign(n, 0.0);
  m.present.assign(n, false);
  for (std::size_t l = 0; l < n; ++l) {
    if (label_images_[l] == 0) continue;
    m.present[l] = true;
    m.iou[l] = iou_[l] / label_images_[l];
    m.f1_per_label[l] = f1_label_[l] / label_images_[l];
  }
  return m;
}

}  // namespace affkit
