#include "affkit/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "affkit/error.hpp"
#include "affkit/random.hpp"

namespace affkit::model {

using ad::Matrix;
using ad::Tape;
using ad::Var;

const char* to_string(DfiMode mode) {
  switch (mode) {
    case DfiMode::kTrainAndInfer: return "train_and_infer";
    case DfiMode::kTrainOnly: return "train_only";
    case DfiMode::kOff: return "off";
  }
  return "?";
}

DfiMode parse_dfi_mode(const std::string& text) {
  if (text == "train_and_infer") return DfiMode::kTrainAndInfer;
  if (text == "train_only") return DfiMode::kTrainOnly;
  if (text == "off") return DfiMode::kOff;
  throw Error(ErrorCode::kInvalidArgument, "unknown dfi mode '" + text + "'");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "model config: " + m); };
  if (input_size <= 0 || patch_size <= 0) fail("sizes must be positive");
  if (input_size % patch_size != 0) throw Error(ErrorCode::kShapeMismatch, "input size not divisible by patch size");
  if (channels <= 0 || channels % 4 != 0) fail("channels must be a positive multiple of 4");
  if (num_heads <= 0 || channels % num_heads != 0) fail("channels must divide into heads");
  if (num_blocks <= 0 || encoder_depth <= 0 || encoder_depth % num_blocks != 0)
    fail("num_blocks must divide encoder depth");
  if (mlp_ratio <= 0 || stem_channels <= 0) fail("mlp ratio and stem channels must be positive");
  if (lora_rank < 0 || lora_rank > channels / 4) fail("lora rank must lie in [0, C/4]");
  if (labels.empty()) fail("label vocabulary is empty");
  if (!(logit_scale > 0.0) || !std::isfinite(tau)) fail("logit scale must be positive and tau finite");
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.input_size = 448;
  c.patch_size = 14;
  c.channels = 768;
  c.encoder_depth = 12;
  c.num_heads = 12;
  c.lora_rank = 8;
  return c;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"input_size", c.input_size},
          {"patch_size", c.patch_size},
          {"channels", c.channels},
          {"encoder_depth", c.encoder_depth},
          {"num_blocks", c.num_blocks},
          {"num_heads", c.num_heads},
          {"mlp_ratio", c.mlp_ratio},
          {"stem_channels", c.stem_channels},
          {"dfi", to_string(c.dfi)},
          {"lora_rank", c.lora_rank},
          {"tau", c.tau},
          {"logit_scale", c.logit_scale},
          {"classifier_source", c.classifier_source == ClassifierSource::kLearnable ? "learnable" : "external"},
          {"labels", c.labels},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.input_size = j.at("input_size").get<int>();
    c.patch_size = j.at("patch_size").get<int>();
    c.channels = j.at("channels").get<int>();
    c.encoder_depth = j.at("encoder_depth").get<int>();
    c.num_blocks = j.at("num_blocks").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.mlp_ratio = j.at("mlp_ratio").get<int>();
    c.stem_channels = j.at("stem_channels").get<int>();
    c.dfi = parse_dfi_mode(j.at("dfi").get<std::string>());
    c.lora_rank = j.at("lora_rank").get<int>();
    c.tau = j.at("tau").get<double>();
    c.logit_scale = j.at("logit_scale").get<double>();
    c.classifier_source =
        j.at("classifier_source").get<std::string>() == "external" ? ClassifierSource::kExternal : ClassifierSource::kLearnable;
    c.labels = j.at("labels").get<std::vector<std::string>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("model config: ") + e.what());
  }
}

// Linearly spaced frequencies make the codes of distinct rows (and columns)
// orthogonal for grids up to 2 * quarter, and the amplitude keeps self matches
// dominant when depth tokens are attended by position.
constexpr double kPosAmplitude = std::numbers::sqrt2;

Matrix positional_embedding(int grid, int channels) {
  const int quarter = channels / 4;
  Matrix pe(grid * grid, channels);
  for (int r = 0; r < grid; ++r)
    for (int c = 0; c < grid; ++c) {
      auto row = pe.row(r * grid + c);
      for (int k = 0; k < quarter; ++k) {
        const double omega = std::numbers::pi * k / quarter;
        row(k) = kPosAmplitude * std::sin(r * omega);
        row(quarter + k) = kPosAmplitude * std::cos(r * omega);
        row(2 * quarter + k) = kPosAmplitude * std::sin(c * omega);
        row(3 * quarter + k) = kPosAmplitude * std::cos(c * omega);
      }
    }
  return pe;
}

Matrix patchify(const RgbImage& image, int patch) {
  if (image.width() % patch != 0 || image.height() % patch != 0)
    throw Error(ErrorCode::kShapeMismatch, "image size not divisible by patch size");
  const int gw = image.width() / patch, gh = image.height() / patch;
  Matrix out(gw * gh, 3 * patch * patch);
  for (int gy = 0; gy < gh; ++gy)
    for (int gx = 0; gx < gw; ++gx) {
      auto row = out.row(gy * gw + gx);
      int k = 0;
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < 3; ++ch, ++k)
            row(k) = (image.at(gx * patch + dx, gy * patch + dy, ch) / 255.0 - 0.5) / 0.25;
    }
  return out;
}

Var depth_stem(Tape& tape, const DepthMap& depth, int patch, const StemWeights& w) {
  if (patch <= 0 || depth.width() % patch != 0 || depth.height() % patch != 0)
    throw Error(ErrorCode::kShapeMismatch, "depth size not divisible by patch size");
  const int h = depth.height(), wd = depth.width();
  Matrix d(static_cast<Eigen::Index>(h) * wd, 1);
  // Same centring as image pixels so depth tokens are not swamped by the
  // positional embedding.
  for (std::size_t i = 0; i < depth.data().size(); ++i)
    d(static_cast<Eigen::Index>(i), 0) = (depth.data()[i] - 0.5) / 0.25;
  Var x = tape.constant(std::move(d));
  x = ad::relu(ad::linear(ad::im2col3x3(x, h, wd), w.conv1_w, w.conv1_b));
  x = ad::relu(ad::linear(ad::im2col3x3(x, h, wd), w.conv2_w, w.conv2_b));
  x = ad::patch_mean_pool(x, h, wd, patch);
  return ad::linear(x, w.proj_w, w.proj_b);
}

Var dfi_forward(const Var& f_img, const Var& f_depth, const DfiWeights& w) {
  if (f_img.rows() != f_depth.rows() || f_img.cols() != f_depth.cols())
    throw Error(ErrorCode::kShapeMismatch, "image and depth tokens differ in shape");
  const Var q = ad::linear(f_img, w.wq, w.bq);
  const Var k = ad::linear(f_depth, w.wk, w.bk);
  const Var v = ad::linear(f_depth, w.wv, w.bv);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(f_img.cols()));
  const Var attn = ad::softmax_rows(ad::scale(ad::matmul_nt(q, k), inv_sqrt_dk));
  return ad::add(ad::mul_row(ad::matmul(attn, v), w.beta), f_img);
}

Var lora_linear(const Var& x, const Var& w0, const Var& b0, const Var& a, const Var& b) {
  if (a.cols() != w0.cols() || b.rows() != w0.rows() || b.cols() != a.rows())
    throw Error(ErrorCode::kShapeMismatch, "adapter shapes do not match the frozen weight");
  return ad::add(ad::linear(x, w0, b0), ad::linear(ad::linear(x, a, Var{}), b, Var{}));
}

LabelMap labels_from_scores(const Matrix& scores, int width, int height, double tau) {
  if (scores.rows() != static_cast<Eigen::Index>(width) * height)
    throw Error(ErrorCode::kShapeMismatch, "score rows do not match the label map size");
  LabelMap out(width, height);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < scores.cols(); ++l)
      if (scores(i, l) > scores(i, best)) best = l;
    if (scores(i, best) >= tau) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

// --- SegmentationModel -------------------------------------------------------

namespace {

std::string layer_name(int l, const char* leaf) { return "backbone.L" + std::to_string(l) + "." + leaf; }

Matrix gaussian(std::uint64_t seed, const std::string& name, Eigen::Index rows, Eigen::Index cols, double std) {
  Rng rng(derive_seed({seed, fnv1a(name)}));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * normal(rng);
  return m;
}

bool is_backbone(const std::string& name) { return name.rfind("backbone.", 0) == 0; }

}  // namespace

SegmentationModel::SegmentationModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pos_embed_ = positional_embedding(cfg_.grid(), cfg_.channels);
  init_parameters();
}

void SegmentationModel::add(const std::string& name, Matrix value, bool trainable) {
  ad::Parameter p;
  p.value = std::move(value);
  p.trainable = trainable;
  params_.insert_or_assign(name, std::move(p));
}

void SegmentationModel::init_parameters() {
  const int c = cfg_.channels, p = cfg_.patch_size, s = cfg_.stem_channels, hidden = c * cfg_.mlp_ratio;
  const std::uint64_t seed = cfg_.seed;
  auto dense = [&](const std::string& name, int out, int in, bool trainable) {
    add(name + ".w", gaussian(seed, name + ".w", out, in, 1.0 / std::sqrt(in)), trainable);
    add(name + ".b", Matrix::Zero(1, out), trainable);
  };
  auto norm = [&](const std::string& name) {
    add(name + ".g", Matrix::Ones(1, c), false);
    add(name + ".b", Matrix::Zero(1, c), false);
  };

  dense("backbone.patch", c, 3 * p * p, false);
  for (int l = 0; l < cfg_.encoder_depth; ++l) {
    norm(layer_name(l, "ln1"));
    for (const char* proj : {"q", "k", "v", "o"}) dense(layer_name(l, "attn.") + proj, c, c, false);
    norm(layer_name(l, "ln2"));
    dense(layer_name(l, "mlp.fc1"), hidden, c, false);
    dense(layer_name(l, "mlp.fc2"), c, hidden, false);
    if (cfg_.lora_rank > 0)
      for (const char* proj : {"q", "k", "v"}) {
        const std::string base = "lora.L" + std::to_string(l) + "." + proj;
        add(base + ".A", gaussian(seed, base + ".A", cfg_.lora_rank, c, 1.0 / std::sqrt(c)), true);
        add(base + ".B", Matrix::Zero(c, cfg_.lora_rank), true);
      }
  }
  norm("backbone.ln_f");

  if (cfg_.dfi != DfiMode::kOff) {
    for (int b = 0; b < cfg_.num_blocks; ++b) {
      const std::string base = "dfi.B" + std::to_string(b);
      // Identity projections let queries and keys start out matched on the
      // shared positional code.
      for (const char* proj : {"q", "k", "v"}) {
        add(base + "." + proj + ".w", Matrix::Identity(c, c), true);
        add(base + "." + proj + ".b", Matrix::Zero(1, c), true);
      }
      add(base + ".beta", Matrix::Zero(1, c), true);
    }
    add("stem.conv1.w", gaussian(seed, "stem.conv1.w", s, 9, std::sqrt(2.0 / 9)), true);
    add("stem.conv1.b", gaussian(seed, "stem.conv1.b", 1, s, 0.1), true);
    add("stem.conv2.w", gaussian(seed, "stem.conv2.w", s, 9 * s, std::sqrt(2.0 / (9 * s))), true);
    add("stem.conv2.b", gaussian(seed, "stem.conv2.b", 1, s, 0.1), true);
    dense("stem.proj", c, s, true);
  }

  dense("head.fc1", c, c, true);
  dense("head.fc2", c, c, true);
  add("classifier.M", gaussian(seed, "classifier.M", cfg_.num_labels(), c, 1.0),
      cfg_.classifier_source == ClassifierSource::kLearnable);
}

ad::Parameter& SegmentationModel::parameter(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::kInvalidArgument, "no parameter named " + name);
  return it->second;
}

const ad::Parameter& SegmentationModel::parameter(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::kInvalidArgument, "no parameter named " + name);
  return it->second;
}

std::vector<std::string> SegmentationModel::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_)
    if (p.trainable) out.push_back(name);
  return out;
}

SegmentationModel::Binder SegmentationModel::parameter_binder(Tape& tape) {
  return [this, &tape](const std::string& name) { return tape.parameter(parameter(name)); };
}

SegmentationModel::Binder SegmentationModel::constant_binder(Tape& tape) const {
  return [this, &tape](const std::string& name) { return tape.constant(parameter(name).value); };
}

Var SegmentationModel::depth_stem(Tape& tape, const DepthMap& depth, const Binder& bind) const {
  StemWeights w{bind("stem.conv1.w"), bind("stem.conv1.b"), bind("stem.conv2.w"),
                bind("stem.conv2.b"), bind("stem.proj.w"),  bind("stem.proj.b")};
  return model::depth_stem(tape, depth, cfg_.patch_size, w);
}

Var SegmentationModel::encoder_forward(Tape& tape, const RgbImage& image, const DepthMap* depth, Phase phase,
                                       const Binder& bind) const {
  if (image.width() != cfg_.input_size || image.height() != cfg_.input_size)
    throw Error(ErrorCode::kShapeMismatch, "image must be " + std::to_string(cfg_.input_size) + " px square");
  const bool use_dfi = cfg_.dfi_active(phase);
  Var depth_tokens;
  if (use_dfi) {
    if (depth == nullptr) throw Error(ErrorCode::kMissingDepth, "depth feature injection is active but no depth was given");
    if (depth->width() != image.width() || depth->height() != image.height())
      throw Error(ErrorCode::kShapeMismatch, "depth and image sizes differ");
    depth_tokens = ad::add(depth_stem(tape, *depth, bind), tape.constant(pos_embed_));
  }

  const Var pos = tape.constant(pos_embed_);
  Var x = ad::add(ad::linear(tape.constant(patchify(image, cfg_.patch_size)), bind("backbone.patch.w"),
                             bind("backbone.patch.b")),
                  pos);
  const int per_block = cfg_.encoder_depth / cfg_.num_blocks;
  const int heads = cfg_.num_heads, dh = cfg_.channels / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  for (int l = 0; l < cfg_.encoder_depth; ++l) {
    if (use_dfi && l % per_block == 0) {
      const std::string b = "dfi.B" + std::to_string(l / per_block);
      DfiWeights w{bind(b + ".q.w"), bind(b + ".q.b"), bind(b + ".k.w"), bind(b + ".k.b"),
                   bind(b + ".v.w"), bind(b + ".v.b"), bind(b + ".beta")};
      x = dfi_forward(x, depth_tokens, w);
    }
    const Var h = ad::layer_norm(x, bind(layer_name(l, "ln1.g")), bind(layer_name(l, "ln1.b")));
    auto project = [&](const char* which) {
      const std::string base = layer_name(l, "attn.") + which;
      if (cfg_.lora_rank == 0) return ad::linear(h, bind(base + ".w"), bind(base + ".b"));
      const std::string lora = "lora.L" + std::to_string(l) + "." + which;
      return lora_linear(h, bind(base + ".w"), bind(base + ".b"), bind(lora + ".A"), bind(lora + ".B"));
    };
    const Var q = project("q"), k = project("k"), v = project("v");
    std::vector<Var> outs;
    for (int hd = 0; hd < heads; ++hd) {
      const Var qh = ad::cols(q, hd * dh, dh), kh = ad::cols(k, hd * dh, dh), vh = ad::cols(v, hd * dh, dh);
      outs.push_back(ad::matmul(ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt_dh)), vh));
    }
    const Var attn = heads == 1 ? outs[0] : ad::hcat(outs);
    x = ad::add(x, ad::linear(attn, bind(layer_name(l, "attn.o.w")), bind(layer_name(l, "attn.o.b"))));
    const Var h2 = ad::layer_norm(x, bind(layer_name(l, "ln2.g")), bind(layer_name(l, "ln2.b")));
    const Var m = ad::linear(ad::gelu(ad::linear(h2, bind(layer_name(l, "mlp.fc1.w")), bind(layer_name(l, "mlp.fc1.b")))),
                             bind(layer_name(l, "mlp.fc2.w")), bind(layer_name(l, "mlp.fc2.b")));
    x = ad::add(x, m);
  }
  return ad::layer_norm(x, bind("backbone.ln_f.g"), bind("backbone.ln_f.b"));
}

Var SegmentationModel::coarse_scores(Tape&, const Var& tokens, const Binder& bind) const {
  const int g = cfg_.grid();
  Var e = ad::gelu(ad::linear(tokens, bind("head.fc1.w"), bind("head.fc1.b")));
  e = ad::linear(e, bind("head.fc2.w"), bind("head.fc2.b"));
  e = ad::resize_bilinear(e, g, g, 4 * g, 4 * g);
  return ad::matmul_nt(ad::l2_normalize_rows(e), ad::l2_normalize_rows(bind("classifier.M")));
}

Var SegmentationModel::forward(Tape& tape, const RgbImage& image, const DepthMap* depth, Phase phase,
                               const Binder& bind) const {
  const int g = cfg_.grid();
  const Var coarse = coarse_scores(tape, encoder_forward(tape, image, depth, phase, bind), bind);
  return ad::resize_bilinear(coarse, 4 * g, 4 * g, cfg_.input_size, cfg_.input_size);
}

SegmentationOutput SegmentationModel::segment(const RgbImage& image, const DepthMap* depth,
                                              std::optional<double> tau) const {
  Tape tape;
  const Binder bind = constant_binder(tape);
  const int g = cfg_.grid();
  const Var coarse = coarse_scores(tape, encoder_forward(tape, image, depth, Phase::kInfer, bind), bind);
  const Var full = ad::resize_bilinear(coarse, 4 * g, 4 * g, cfg_.input_size, cfg_.input_size);
  SegmentationOutput out;
  out.width = cfg_.input_size;
  out.height = cfg_.input_size;
  out.coarse_scores = coarse.value();
  out.scores = full.value();
  out.labels = labels_from_scores(out.scores, out.width, out.height, tau.value_or(cfg_.tau));
  return out;
}

void SegmentationModel::set_external_embeddings(const std::vector<std::string>& labels, const Matrix& embeddings) {
  if (labels.empty() || static_cast<Eigen::Index>(labels.size()) != embeddings.rows())
    throw Error(ErrorCode::kVocabularyMismatch, "embedding rows do not match the vocabulary");
  if (embeddings.cols() != cfg_.channels)
    throw Error(ErrorCode::kShapeMismatch, "embedding width differs from model channels");
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r)
    if (!(embeddings.row(r).norm() >= 1e-8))
      throw Error(ErrorCode::kInvalidArgument, "embedding row for '" + labels[static_cast<std::size_t>(r)] + "' is zero");
  cfg_.labels = labels;
  cfg_.classifier_source = ClassifierSource::kExternal;
  add("classifier.M", embeddings, false);
}

void SegmentationModel::load_backbone(const Archive& archive) {
  for (auto& [name, p] : params_) {
    if (!is_backbone(name)) continue;
    auto it = archive.arrays.find(name);
    if (it == archive.arrays.end()) throw Error(ErrorCode::kFormatError, "backbone archive lacks " + name);
    const auto& arr = it->second;
    if (arr.shape.size() != 2 || arr.shape[0] != p.value.rows() || arr.shape[1] != p.value.cols())
      throw Error(ErrorCode::kShapeMismatch, "backbone array " + name + " has the wrong shape");
    std::memcpy(p.value.data(), arr.data.data(), arr.data.size() * sizeof(double));
  }
}

std::uint64_t SegmentationModel::backbone_digest() const {
  std::uint64_t h = fnv1a("");
  for (const auto& [name, p] : params_) {
    if (!is_backbone(name)) continue;
    h ^= fnv1a(name);
    h *= 0x100000001b3ULL;
    const auto* bytes = reinterpret_cast<const char*>(p.value.data());
    h ^= fnv1a(std::string_view(bytes, static_cast<std::size_t>(p.value.size()) * sizeof(double)));
    h *= 0x100000001b3ULL;
  }
  return h;
}

Archive SegmentationModel::to_archive() const {
  Archive a;
  a.metadata = {{"format", "affkit-checkpoint"}, {"version", 1}, {"config", config_to_json(cfg_)}};
  for (const auto& [name, p] : params_) {
    ArchiveArray arr;
    arr.shape = {p.value.rows(), p.value.cols()};
    arr.data.assign(p.value.data(), p.value.data() + p.value.size());
    a.arrays.emplace(name, std::move(arr));
  }
  return a;
}

SegmentationModel SegmentationModel::from_archive(const Archive& archive) {
  if (!archive.metadata.contains("config")) throw Error(ErrorCode::kFormatError, "checkpoint has no model config");
  SegmentationModel m(config_from_json(archive.metadata.at("config")));
  for (auto& [name, p] : m.params_) {
    auto it = archive.arrays.find(name);
    if (it == archive.arrays.end()) throw Error(ErrorCode::kFormatError, "checkpoint lacks " + name);
    const auto& arr = it->second;
    if (arr.shape.size() != 2 || arr.shape[0] != p.value.rows() || arr.shape[1] != p.value.cols())
      throw Error(ErrorCode::kFormatError, "checkpoint array " + name + " has the wrong shape");
    std::memcpy(p.value.data(), arr.data.data(), arr.data.size() * sizeof(double));
  }
  return m;
}

void SegmentationModel::save(const std::filesystem::path& path) const { write_archive(path, to_archive()); }

SegmentationModel SegmentationModel::load(const std::filesystem::path& path) { return from_archive(read_archive(path)); }

ExternalEmbeddings load_external_embeddings(const std::filesystem::path& archive_path,
                                            const std::filesystem::path& vocabulary) {
  const Archive a = read_archive(archive_path);
  auto it = a.arrays.find("embeddings");
  if (it == a.arrays.end() || it->second.shape.size() != 2)
    throw Error(ErrorCode::kFormatError, "embedding archive needs a 2-D 'embeddings' array");
  ExternalEmbeddings e;
  std::ifstream in(vocabulary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + vocabulary.string());
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) e.labels.push_back(line);
  const auto rows = it->second.shape[0], cols = it->second.shape[1];
  if (static_cast<std::int64_t>(e.labels.size()) != rows)
    throw Error(ErrorCode::kVocabularyMismatch, "vocabulary has " + std::to_string(e.labels.size()) +
                                                    " entries but the embedding archive has " + std::to_string(rows) +
                                                    " rows");
  e.rows = Eigen::Map<const Matrix>(it->second.data.data(), rows, cols);
  return e;
}

void save_external_embeddings(const std::filesystem::path& archive_path, const std::filesystem::path& vocabulary,
                              const ExternalEmbeddings& e) {
  if (static_cast<Eigen::Index>(e.labels.size()) != e.rows.rows())
    throw Error(ErrorCode::kVocabularyMismatch, "vocabulary and embedding rows differ");
  Archive a;
  a.metadata = {{"format", "affkit-embeddings"}, {"version", 1}};
  ArchiveArray arr;
  arr.shape = {e.rows.rows(), e.rows.cols()};
  arr.data.assign(e.rows.data(), e.rows.data() + e.rows.size());
  a.arrays.emplace("embeddings", std::move(arr));
  write_archive(archive_path, a);
  std::ofstream out(vocabulary, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + vocabulary.string());
  for (const auto& l : e.labels) out << l << "\n";
}

}  // namespace affkit::model
