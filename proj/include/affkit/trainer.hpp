#pragma once

// Dataset augmentation, AdamW optimization loop, checkpointing and
// evaluation.
//
// Config file (INI-style sections, every key optional):
//
//   [train]  learning_rate batch_size epochs resize crop flip_horizontal
//            flip_vertical seed weight_decay
//   [model]  patch_size channels encoder_depth num_blocks num_heads
//            mlp_ratio stem_channels dfi lora_rank tau logit_scale seed
//            embeddings vocabulary
//   [loss]   gamma epsilon alpha
//
// The model input size is always the crop size and the label vocabulary comes
// from the dataset (or from the external embedding vocabulary when given).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affkit/dataset.hpp"
#include "affkit/losses.hpp"
#include "affkit/metrics.hpp"
#include "affkit/model.hpp"

namespace affkit::trainer {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 15;
  int resize = 476;
  int crop = 448;
  bool flip_horizontal = true;
  bool flip_vertical = true;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  LossConfig loss;
  model::ModelConfig model = model::ModelConfig::full_scale();
  std::filesystem::path embeddings;  // optional external classifier rows
  std::filesystem::path vocabulary;

  void validate() const;
  // 64 px crops, 8 px patches, 64 channels; crops are not jittered so that
  // part boundaries stay on the patch grid.
  static TrainConfig toy();
};

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = TrainConfig::toy());
nlohmann::json config_to_json(const TrainConfig& cfg);

// Resize to cfg.resize, crop cfg.crop at a random offset, then flip each axis
// with probability 1/2 when enabled. Image, depth and masks move together.
AffordanceSample augment(const AffordanceSample& sample, const TrainConfig& cfg, std::uint64_t seed);
// Evaluation view: straight resize to the crop size.
AffordanceSample eval_view(const AffordanceSample& sample, int size);

// P x L binary target in the vocabulary's label order.
ad::Matrix target_matrix(const AffordanceSample& sample, const std::vector<std::string>& vocabulary);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double focal = 0.0;
  double dice = 0.0;
  double train_miou = 0.0;
  double learning_rate = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
  std::vector<EpochRecord> epochs;
};

class AdamW {
 public:
  AdamW(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(model::SegmentationModel& model);

 private:
  double lr_, wd_, b1_, b2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<ad::Matrix, ad::Matrix>> moments_;
};

// Writes <out>/checkpoints/epNNN.afk for every epoch (ep000 = initialization),
// <out>/checkpoints/best.afk -> best running-train-mIoU epoch, a JSONL log
// with wall times and a timestamp-free loss_curve.json.
TrainResult train(const DatasetHandle& dataset, const TrainConfig& cfg, const std::filesystem::path& out,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Builds the model that train() would start from.
model::SegmentationModel initial_model(const DatasetHandle& dataset, const TrainConfig& cfg);

struct EvalReport {
  std::vector<std::string> labels;
  Metrics mean;  // macro over images
  int images = 0;
  int skipped = 0;  // images without foreground ground truth
};

EvalReport evaluate(const DatasetHandle& dataset, const model::SegmentationModel& model);
EvalReport evaluate(const DatasetHandle& dataset, const std::filesystem::path& checkpoint);
nlohmann::json report_to_json(const EvalReport& report);

}  // namespace affkit::trainer
