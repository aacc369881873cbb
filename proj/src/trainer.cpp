#include "affkit/trainer.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "affkit/error.hpp"
#include "affkit/random.hpp"

namespace affkit::trainer {

namespace fs = std::filesystem;
using ad::Matrix;

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "train config: " + m); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be finite and >= 0");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (crop < 1 || crop > resize) fail("need 1 <= crop <= resize");
  if (!(weight_decay >= 0.0)) fail("weight decay must be >= 0");
  if (model.input_size != crop) fail("model input size must equal the crop size");
  loss.validate();
  model.validate();
}

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.model = model::ModelConfig::toy();
  c.resize = c.model.input_size;
  c.crop = c.model.input_size;
  return c;
}

TrainConfig load_config(const fs::path& path, TrainConfig base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kFormatError, std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> kKnown = {
      {"train",
       {"learning_rate", "batch_size", "epochs", "resize", "crop", "flip_horizontal", "flip_vertical", "seed",
        "weight_decay"}},
      {"model",
       {"patch_size", "channels", "encoder_depth", "num_blocks", "num_heads", "mlp_ratio", "stem_channels", "dfi",
        "lora_rank", "tau", "logit_scale", "seed", "embeddings", "vocabulary"}},
      {"loss", {"gamma", "epsilon", "alpha"}}};
  for (const auto& [section, keys] : tree) {
    auto known = kKnown.find(section);
    if (known == kKnown.end()) throw Error(ErrorCode::kInvalidArgument, "config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys)
      if (!known->second.contains(key))
        throw Error(ErrorCode::kInvalidArgument, "config: unknown key " + section + "." + key);
  }
  TrainConfig c = base;
  try {
    auto get = [&](const char* key, auto& field) {
      using T = std::remove_reference_t<decltype(field)>;
      if (auto node = tree.get_child_optional(key)) field = node->get_value<T>();
    };
    get("train.learning_rate", c.learning_rate);
    get("train.batch_size", c.batch_size);
    get("train.epochs", c.epochs);
    get("train.resize", c.resize);
    get("train.crop", c.crop);
    get("train.flip_horizontal", c.flip_horizontal);
    get("train.flip_vertical", c.flip_vertical);
    get("train.seed", c.seed);
    get("train.weight_decay", c.weight_decay);
    get("model.patch_size", c.model.patch_size);
    get("model.channels", c.model.channels);
    get("model.encoder_depth", c.model.encoder_depth);
    get("model.num_blocks", c.model.num_blocks);
    get("model.num_heads", c.model.num_heads);
    get("model.mlp_ratio", c.model.mlp_ratio);
    get("model.stem_channels", c.model.stem_channels);
    get("model.lora_rank", c.model.lora_rank);
    get("model.tau", c.model.tau);
    get("model.logit_scale", c.model.logit_scale);
    get("model.seed", c.model.seed);
    get("loss.gamma", c.loss.gamma);
    get("loss.epsilon", c.loss.epsilon);
    get("loss.alpha", c.loss.alpha);
    if (auto v = tree.get_optional<std::string>("model.dfi")) c.model.dfi = model::parse_dfi_mode(*v);
    if (auto v = tree.get_optional<std::string>("model.embeddings")) c.embeddings = path.parent_path() / *v;
    if (auto v = tree.get_optional<std::string>("model.vocabulary")) c.vocabulary = path.parent_path() / *v;
  } catch (const pt::ptree_bad_data& e) {
    throw Error(ErrorCode::kFormatError, std::string("config: bad value: ") + e.what());
  }
  c.model.input_size = c.crop;
  return c;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"resize", c.resize},
          {"crop", c.crop},
          {"flip_horizontal", c.flip_horizontal},
          {"flip_vertical", c.flip_vertical},
          {"seed", c.seed},
          {"weight_decay", c.weight_decay},
          {"loss", {{"gamma", c.loss.gamma}, {"epsilon", c.loss.epsilon}, {"alpha", c.loss.alpha}}},
          {"model", model::config_to_json(c.model)},
          {"embeddings", c.embeddings.string()},
          {"vocabulary", c.vocabulary.string()}};
}

namespace {

AffordanceSample resized(const AffordanceSample& s, int size) {
  if (s.image.width() == size && s.image.height() == size) return s;
  AffordanceSample out;
  out.image = resize_bilinear(s.image, size, size);
  out.depth = resize_bilinear(s.depth, size, size);
  for (const auto& [label, mask] : s.masks) out.masks.emplace(label, resize_nearest(mask, size, size));
  out.object_category = s.object_category;
  out.source_clip = s.source_clip;
  return out;
}

}  // namespace

AffordanceSample augment(const AffordanceSample& sample, const TrainConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const auto span = static_cast<std::uint64_t>(cfg.resize - cfg.crop + 1);
  const int ox = static_cast<int>(uniform_index(rng, span));
  const int oy = static_cast<int>(uniform_index(rng, span));
  const bool fh = uniform01(rng) < 0.5;
  const bool fv = uniform01(rng) < 0.5;

  AffordanceSample s = resized(sample, cfg.resize);
  if (cfg.crop != cfg.resize) {
    const PixelWindow w{ox, oy, ox + cfg.crop, oy + cfg.crop};
    s.image = crop(s.image, w);
    s.depth = crop(s.depth, w);
    for (auto& [label, mask] : s.masks) mask = crop(mask, w);
  }
  if (cfg.flip_horizontal && fh) {
    s.image = flip_horizontal(s.image);
    s.depth = flip_horizontal(s.depth);
    for (auto& [label, mask] : s.masks) mask = flip_horizontal(mask);
  }
  if (cfg.flip_vertical && fv) {
    s.image = flip_vertical(s.image);
    s.depth = flip_vertical(s.depth);
    for (auto& [label, mask] : s.masks) mask = flip_vertical(mask);
  }
  return s;
}

AffordanceSample eval_view(const AffordanceSample& sample, int size) { return resized(sample, size); }

Matrix target_matrix(const AffordanceSample& s, const std::vector<std::string>& vocabulary) {
  const int w = s.image.width(), h = s.image.height();
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(w) * h, static_cast<Eigen::Index>(vocabulary.size()));
  for (std::size_t l = 0; l < vocabulary.size(); ++l) {
    auto it = s.masks.find(vocabulary[l]);
    if (it == s.masks.end()) continue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (it->second.get(x, y)) t(static_cast<Eigen::Index>(y) * w + x, static_cast<Eigen::Index>(l)) = 1.0;
  }
  return t;
}

AdamW::AdamW(double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamW::step(model::SegmentationModel& model) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (auto& [name, p] : model.parameters()) {
    if (!p.trainable || p.grad.size() == 0) continue;
    auto& [m, v] = moments_[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    m = b1_ * m + (1.0 - b1_) * p.grad;
    v = b2_ * v + (1.0 - b2_) * p.grad.cwiseProduct(p.grad);
    const Matrix update = (m / c1).array() / ((v / c2).array().sqrt() + eps_) + wd_ * p.value.array();
    p.value -= lr_ * update;
  }
}

model::SegmentationModel initial_model(const DatasetHandle& dataset, const TrainConfig& cfg) {
  model::ModelConfig mc = cfg.model;
  mc.labels = dataset.labels;
  model::SegmentationModel m(mc);
  if (!cfg.embeddings.empty()) {
    const auto e = model::load_external_embeddings(cfg.embeddings, cfg.vocabulary);
    if (e.labels != dataset.labels)
      throw Error(ErrorCode::kVocabularyMismatch, "embedding vocabulary does not match the dataset labels");
    m.set_external_embeddings(e.labels, e.rows);
  }
  return m;
}

namespace {

std::string epoch_file(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ep%03d.afk", epoch);
  return buf;
}

nlohmann::json record_json(const EpochRecord& r, bool with_time) {
  nlohmann::json j = {{"epoch", r.epoch},   {"loss", r.loss},
                      {"focal", r.focal},   {"dice", r.dice},
                      {"train_miou", r.train_miou}, {"lr", r.learning_rate}};
  if (with_time) j["wall_time_s"] = r.wall_seconds;
  return j;
}

}  // namespace

TrainResult train(const DatasetHandle& dataset, const TrainConfig& cfg, const fs::path& out,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (dataset.size() == 0) throw Error(ErrorCode::kInvalidArgument, "dataset is empty");
  model::SegmentationModel model = initial_model(dataset, cfg);
  const auto& labels = model.config().labels;

  std::vector<AffordanceSample> samples;
  samples.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) samples.push_back(load_sample(dataset, i));

  const fs::path ckpt_dir = out / "checkpoints";
  fs::create_directories(ckpt_dir);
  std::ofstream log(out / "train_log.jsonl", std::ios::trunc);
  if (!log) throw Error(ErrorCode::kIoError, "cannot write training log in " + out.string());

  TrainResult result;
  model.save(ckpt_dir / epoch_file(0));
  result.final_checkpoint = ckpt_dir / epoch_file(0);
  int best_epoch = 0;
  double best_miou = -1.0;

  AdamW opt(cfg.learning_rate, cfg.weight_decay);
  const auto trainable = model.trainable_names();
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(samples.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed({cfg.seed, static_cast<std::uint64_t>(epoch), fnv1a("shuffle")}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle, i)]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = cfg.learning_rate;
    MacroAverage running(static_cast<int>(labels.size()));

    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      for (const auto& name : trainable) model.parameter(name).zero_grad();
      for (std::size_t k = b0; k < b1; ++k) {
        const std::size_t idx = order[k];
        const AffordanceSample s =
            augment(samples[idx], cfg, derive_seed({cfg.seed, static_cast<std::uint64_t>(epoch), idx}));
        ad::Tape tape;
        const ad::Var scores = model.forward(tape, s.image, &s.depth, model::Phase::kTrain, model.parameter_binder(tape));
        const ad::Var y = ad::sigmoid_affine(scores, model.config().logit_scale, model.config().tau);
        LossTerms terms;
        const ad::Var loss = total_loss(y, target_matrix(s, labels), cfg.loss, &terms);
        if (!std::isfinite(terms.total))
          throw Error(ErrorCode::kNonFiniteLoss, "loss became " + std::to_string(terms.total) + " at epoch " +
                                                     std::to_string(epoch) + ", sample " + dataset.records[idx].id);
        tape.backward(loss);
        rec.loss += terms.total;
        rec.focal += terms.focal;
        rec.dice += terms.dice;
        const LabelMap gt = label_map(s, labels);
        if (std::any_of(gt.labels.begin(), gt.labels.end(), [](int v) { return v != kBackground; }))
          running.add(compute_metrics(
              model::labels_from_scores(scores.value(), s.image.width(), s.image.height(), model.config().tau), gt,
              static_cast<int>(labels.size())));
      }
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      for (const auto& name : trainable) model.parameter(name).grad *= inv;
      opt.step(model);
    }

    const double n = static_cast<double>(samples.size());
    rec.loss /= n;
    rec.focal /= n;
    rec.dice /= n;
    rec.train_miou = running.images() > 0 ? running.mean().miou : 0.0;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    model.save(ckpt_dir / epoch_file(epoch));
    result.final_checkpoint = ckpt_dir / epoch_file(epoch);
    if (rec.train_miou > best_miou) {
      best_miou = rec.train_miou;
      best_epoch = epoch;
    }
    log << record_json(rec, true).dump() << "\n" << std::flush;
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  const fs::path best = ckpt_dir / "best.afk";
  std::error_code ec;
  fs::remove(best, ec);
  fs::create_symlink(epoch_file(best_epoch), best);
  result.best_checkpoint = best;

  nlohmann::json curve = nlohmann::json::array();
  for (const auto& r : result.epochs) curve.push_back(record_json(r, false));
  std::ofstream(out / "loss_curve.json", std::ios::trunc)
      << nlohmann::json{{"config", config_to_json(cfg)}, {"best_epoch", best_epoch}, {"epochs", curve}}.dump(2) << "\n";
  return result;
}

EvalReport evaluate(const DatasetHandle& dataset, const model::SegmentationModel& model) {
  const auto& labels = model.config().labels;
  if (labels != dataset.labels)
    throw Error(ErrorCode::kVocabularyMismatch, "dataset has " + std::to_string(dataset.labels.size()) +
                                                    " labels but the model was trained on " +
                                                    std::to_string(labels.size()));
  EvalReport report;
  report.labels = labels;
  MacroAverage avg(static_cast<int>(labels.size()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const AffordanceSample s = eval_view(load_sample(dataset, i), model.config().input_size);
    const LabelMap gt = label_map(s, labels);
    if (std::all_of(gt.labels.begin(), gt.labels.end(), [](int v) { return v == kBackground; })) {
      ++report.skipped;
      continue;
    }
    const auto out = model.segment(s.image, &s.depth);
    avg.add(compute_metrics(out.labels, gt, static_cast<int>(labels.size())));
  }
  report.images = avg.images();
  if (report.images > 0) report.mean = avg.mean();
  return report;
}

EvalReport evaluate(const DatasetHandle& dataset, const fs::path& checkpoint) {
  return evaluate(dataset, model::SegmentationModel::load(checkpoint));
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json per_label = nlohmann::json::object();
  for (std::size_t l = 0; l < r.labels.size(); ++l) {
    if (r.mean.present.empty() || !r.mean.present[l]) {
      per_label[r.labels[l]] = nullptr;
      continue;
    }
    per_label[r.labels[l]] = {{"iou", r.mean.iou[l]}, {"f1", r.mean.f1_per_label[l]}};
  }
  return {{"images", r.images},
          {"skipped", r.skipped},
          {"miou", r.mean.miou},
          {"f1", r.mean.f1},
          {"acc", r.mean.acc},
          {"labels", per_label}};
}

}  // namespace affkit::trainer
