#pragma once

// Affordance segmentation network: frozen patch-transformer backbone with
// low-rank adapters on the attention projections, a depth stem feeding
// per-block cross-attention injectors, a token MLP embedder, x4 bilinear
// upsampling and a cosine classifier with implicit background.
//
// Token matrices are N x C with rows in row-major patch order.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affkit/archive.hpp"
#include "affkit/autodiff.hpp"
#include "affkit/image.hpp"
#include "affkit/metrics.hpp"

namespace affkit::model {

enum class DfiMode { kTrainAndInfer, kTrainOnly, kOff };
enum class Phase { kTrain, kInfer };
enum class ClassifierSource { kLearnable, kExternal };

const char* to_string(DfiMode mode);
DfiMode parse_dfi_mode(const std::string& text);

struct ModelConfig {
  int input_size = 64;
  int patch_size = 8;
  int channels = 64;
  int encoder_depth = 8;
  int num_blocks = 4;
  int num_heads = 4;
  int mlp_ratio = 4;
  int stem_channels = 16;
  DfiMode dfi = DfiMode::kTrainAndInfer;
  int lora_rank = 4;  // 0 disables the adapters
  double tau = 0.8;
  // Slope of the sigmoid that turns a cosine score into a probability centred
  // on tau; only the training objective sees it.
  double logit_scale = 10.0;
  ClassifierSource classifier_source = ClassifierSource::kLearnable;
  std::vector<std::string> labels = {"grasp", "cut"};
  std::uint64_t seed = 0;

  int grid() const { return input_size / patch_size; }
  int tokens() const { return grid() * grid(); }
  int num_labels() const { return static_cast<int>(labels.size()); }
  bool dfi_active(Phase phase) const {
    return dfi == DfiMode::kTrainAndInfer || (dfi == DfiMode::kTrainOnly && phase == Phase::kTrain);
  }
  void validate() const;

  // Desk-scale preset used by the tests and the acceptance runs.
  static ModelConfig toy();
  // Shapes of a base-size transformer at 448 px (for shape checks only).
  static ModelConfig full_scale();
};

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

// Sin-cos positional embedding of a g x g grid (rows then columns), g*g x C,
// with frequencies pi * k / (C/4).
ad::Matrix positional_embedding(int grid, int channels);

// Image pixels scaled to [0,1] then standardized with mean 0.5 and std 0.25,
// laid out as (H/p*W/p) x (3*p*p) rows of (dy, dx, channel).
ad::Matrix patchify(const RgbImage& image, int patch);

struct StemWeights {
  ad::Var conv1_w, conv1_b;  // s x 9, 1 x s
  ad::Var conv2_w, conv2_b;  // s x 9s, 1 x s
  ad::Var proj_w, proj_b;    // C x s, 1 x C
};

// Two replicate-padded 3x3 conv + ReLU layers, p x p mean pooling and a 1x1
// projection to C channels. Returns (H/p * W/p) x C tokens.
ad::Var depth_stem(ad::Tape& tape, const DepthMap& depth, int patch, const StemWeights& w);

struct DfiWeights {
  ad::Var wq, bq, wk, bk, wv, bv, beta;
};

// beta .* softmax(phi_q(f_img) phi_k(f_depth)^T / sqrt(C)) phi_v(f_depth) + f_img
ad::Var dfi_forward(const ad::Var& f_img, const ad::Var& f_depth, const DfiWeights& w);

// x W0^T + b0 + (x A^T) B^T. W0 is d x k, A is r x k, B is d x r.
ad::Var lora_linear(const ad::Var& x, const ad::Var& w0, const ad::Var& b0, const ad::Var& a, const ad::Var& b);

struct SegmentationOutput {
  int width = 0;
  int height = 0;
  ad::Matrix coarse_scores;  // (4H/p * 4W/p) x L cosine map
  ad::Matrix scores;         // (H * W) x L after bilinear restoration
  LabelMap labels;
};

// argmax over labels where the best score reaches tau, background otherwise.
// Ties go to the lowest label index.
LabelMap labels_from_scores(const ad::Matrix& scores, int width, int height, double tau);

class SegmentationModel {
 public:
  explicit SegmentationModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  std::map<std::string, ad::Parameter>& parameters() { return params_; }
  const std::map<std::string, ad::Parameter>& parameters() const { return params_; }
  ad::Parameter& parameter(const std::string& name);
  const ad::Parameter& parameter(const std::string& name) const;
  std::vector<std::string> trainable_names() const;

  // Each graph builder takes a binder that turns a parameter name into a tape
  // leaf; training binds parameters, inference binds constants.
  using Binder = std::function<ad::Var(const std::string&)>;
  Binder parameter_binder(ad::Tape& tape);
  Binder constant_binder(ad::Tape& tape) const;

  ad::Var depth_stem(ad::Tape& tape, const DepthMap& depth, const Binder& bind) const;
  ad::Var encoder_forward(ad::Tape& tape, const RgbImage& image, const DepthMap* depth, Phase phase,
                          const Binder& bind) const;
  // Coarse cosine scores of the upsampled embedding grid, (4g)^2 x L.
  ad::Var coarse_scores(ad::Tape& tape, const ad::Var& tokens, const Binder& bind) const;
  // Full-resolution cosine scores, (H*W) x L.
  ad::Var forward(ad::Tape& tape, const RgbImage& image, const DepthMap* depth, Phase phase, const Binder& bind) const;

  SegmentationOutput segment(const RgbImage& image, const DepthMap* depth, std::optional<double> tau = {}) const;

  // Replaces the classifier rows with fixed external embeddings.
  void set_external_embeddings(const std::vector<std::string>& labels, const ad::Matrix& embeddings);
  // Adapter slot for a real frozen encoder: overwrite backbone.* arrays.
  void load_backbone(const Archive& archive);
  // FNV-1a over the raw bytes of every backbone array.
  std::uint64_t backbone_digest() const;

  Archive to_archive() const;
  static SegmentationModel from_archive(const Archive& archive);
  void save(const std::filesystem::path& path) const;
  static SegmentationModel load(const std::filesystem::path& path);

 private:
  void add(const std::string& name, ad::Matrix value, bool trainable);
  void init_parameters();

  ModelConfig cfg_;
  std::map<std::string, ad::Parameter> params_;
  ad::Matrix pos_embed_;
};

struct ExternalEmbeddings {
  std::vector<std::string> labels;
  ad::Matrix rows;  // L x C
};

// Archive with a single "embeddings" array plus a vocabulary text file with
// one label per line in row order.
ExternalEmbeddings load_external_embeddings(const std::filesystem::path& archive,
                                            const std::filesystem::path& vocabulary);
void save_external_embeddings(const std::filesystem::path& archive, const std::filesystem::path& vocabulary,
                              const ExternalEmbeddings& embeddings);

}  // namespace affkit::model
