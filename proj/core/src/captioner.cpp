// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace askcap {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

CaptionerParams::CaptionerParams(const CaptionerShape& shape) : shape_(shape) {
  if (shape.vocab <= Vocabulary::kUnk || shape.width <= 0 || shape.feature_width <= 0 ||
      shape.pos_width <= 0) {
    throw ConfigError("invalid captioner shape");
  }
  const Eigen::Index v = shape.vocab, d = shape.width, f = shape.feature_width,
                     dp = shape.pos_width, p = kNumPos;
  const std::array<std::pair<Eigen::Index, Eigen::Index>, kNumTensors> dims = {{
      {d, v}, {d, v}, {d, d}, {d, d}, {d, f}, {d, 1}, {d, f}, {d, 1},
      {p, d}, {p, 1}, {dp, p}, {v, dp}, {v, 1},
  }};
  Eigen::Index offset = 0;
  for (int i = 0; i < kNumTensors; ++i) {
    blocks_[static_cast<std::size_t>(i)] = {offset, dims[static_cast<std::size_t>(i)].first,
                                            dims[static_cast<std::size_t>(i)].second};
    offset += dims[static_cast<std::size_t>(i)].first * dims[static_cast<std::size_t>(i)].second;
  }
  data_ = Eigen::VectorXd::Zero(offset);
}

CaptionerParams CaptionerParams::random(const CaptionerShape& shape, Rng& rng, double scale) {
  CaptionerParams params(shape);
  std::normal_distribution<double> normal(0.0, scale);
  for (int i = 0; i < kNumTensors; ++i) {
    auto t = static_cast<Tensor>(i);
    if (t == kBias || t == kPosBias || t == kWordBias) continue;
    auto view = params.view(t);
    for (Eigen::Index k = 0; k < view.size(); ++k) view.data()[k] = normal(rng);
  }
  return params;
}

CaptionerParams::View CaptionerParams::view(Tensor t) {
  const Block& b = blocks_.at(static_cast<std::size_t>(t));
  return View(data_.data() + b.offset, b.rows, b.cols);
}

CaptionerParams::ConstView CaptionerParams::view(Tensor t) const {
  const Block& b = blocks_.at(static_cast<std::size_t>(t));
  return ConstView(data_.data() + b.offset, b.rows, b.cols);
}

const char* CaptionerParams::name(Tensor t) {
  static constexpr std::array<const char*, kNumTensors> kNames = {
      "input_embedding", "output_embedding", "w_hidden", "w_input", "w_visual",
      "bias", "w_attention", "u_attention", "w_pos", "b_pos",
      "pos_embedding", "pos_to_word", "b_word"};
  return kNames.at(static_cast<std::size_t>(t));
}

FeatureLayout::FeatureLayout(const Vocabulary& vocab, int num_slots) : num_slots_(num_slots) {
  if (num_slots <= 0) throw ConfigError("num_slots must be positive");
  int next = 0;
  for (Pos pos : {Pos::kNoun, Pos::kAdj, Pos::kVerb}) {
    for (WordId w : vocab.words_with_pos(pos)) index_.emplace(w, next++);
  }
  slot_offset_ = next;
  width_ = next + num_slots;
}

Eigen::MatrixXd FeatureLayout::encode(const Scene& scene) const {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(width_, static_cast<Eigen::Index>(scene.objects.size()));
  auto set = [&](Eigen::Index col, WordId w) {
    if (auto it = index_.find(w); it != index_.end()) f(it->second, col) = 1.0;
  };
  for (std::size_t j = 0; j < scene.objects.size(); ++j) {
    const auto& o = scene.objects[j];
    const auto col = static_cast<Eigen::Index>(j);
    set(col, o.category);
    for (WordId a : o.attributes) set(col, a);
    if (o.action) set(col, *o.action);
    if (o.slot >= 0 && o.slot < num_slots_) f(slot_offset_ + o.slot, col) = 1.0;
  }
  return f;
}

EncodedScene encode_scene(const CaptionerParams& params, const Eigen::MatrixXd& features) {
  if (features.rows() != params.shape().feature_width) {
    throw std::invalid_argument("feature width does not match captioner shape");
  }
  EncodedScene enc;
  enc.features = features;
  enc.attention = params.view(CaptionerParams::kAttention) * features;
  enc.visual = params.view(CaptionerParams::kVisual) * features;
  return enc;
}

Pos StepContext::predicted_pos() const {
  const auto it = std::max_element(pos_dist.begin(), pos_dist.end());
  return static_cast<Pos>(it - pos_dist.begin());
}

Eigen::Index argmax_lowest(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::vector<std::pair<WordId, double>> top_k(const Eigen::VectorXd& probs, int k) {
  std::vector<int> idx(static_cast<std::size_t>(probs.size()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](int a, int b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });
  std::vector<std::pair<WordId, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(idx[i], probs[idx[i]]);
  return out;
}

Captioner::Captioner(CaptionerParams params, std::shared_ptr<const Vocabulary> vocab,
                     FeatureLayout layout)
    : params_(std::move(params)), vocab_(std::move(vocab)), layout_(std::move(layout)) {
  if (!vocab_) throw std::invalid_argument("Captioner needs a vocabulary");
  if (static_cast<std::size_t>(params_.shape().vocab) != vocab_->size()) {
    throw ConfigError("captioner vocabulary size mismatch");
  }
  if (params_.shape().feature_width != layout_.width()) {
    throw ConfigError("captioner feature width mismatch");
  }
}

EncodedScene Captioner::encode(const Scene& scene) const {
  return encode_scene(params_, layout_.encode(scene));
}

Captioner::StepOut Captioner::step(const EncodedScene& enc, const Eigen::VectorXd& h_prev,
                                   WordId input) const {
  using P = CaptionerParams;
  StepOut out;
  const Eigen::MatrixXd z = (enc.attention.colwise() + h_prev).array().tanh().matrix();
  out.attention = softmax(z.transpose() * params_.view(P::kAttentionScore).col(0));
  const Eigen::VectorXd pre = params_.view(P::kHidden) * h_prev +
                              params_.view(P::kInput) * params_.view(P::kInputEmbedding).col(input) +
                              enc.visual * out.attention + params_.view(P::kBias).col(0);
  out.hidden = pre.array().tanh().matrix();
  out.pos_dist = softmax(params_.view(P::kPosHead) * out.hidden + params_.view(P::kPosBias).col(0));
  const Eigen::VectorXd g = params_.view(P::kPosEmbedding) * out.pos_dist;
  out.logits = params_.view(P::kOutputEmbedding).transpose() * out.hidden +
               params_.view(P::kPosToWord) * g + params_.view(P::kWordBias).col(0);
  return out;
}

StepContext Captioner::make_context(int t, const StepOut& out, const Eigen::VectorXd& probs) const {
  StepContext ctx;
  ctx.t = t;
  ctx.hidden = out.hidden;
  ctx.attention = out.attention;
  for (int i = 0; i < kNumPos; ++i) ctx.pos_dist[static_cast<std::size_t>(i)] = out.pos_dist[i];
  ctx.topk = top_k(probs, kTopK);
  ctx.probs = probs;
  return ctx;
}

Decoded Captioner::continue_decoding(const EncodedScene& enc, Decoded d, Eigen::VectorXd h,
                                     WordId input, double temperature, Rng* rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (d.caption.tokens.size() < static_cast<std::size_t>(kMaxCaptionLength)) {
    StepOut out = step(enc, h, input);
    Eigen::VectorXd probs = softmax(out.logits);
    WordId word;
    if (rng == nullptr) {
      word = static_cast<WordId>(argmax_lowest(probs));
    } else {
      const Eigen::VectorXd tempered = softmax(out.logits / temperature);
      const double u = unit(*rng);
      double acc = 0.0;
      word = static_cast<WordId>(tempered.size() - 1);
      for (Eigen::Index i = 0; i < tempered.size(); ++i) {
        acc += tempered[i];
        if (u < acc) {
          word = static_cast<WordId>(i);
          break;
        }
      }
    }
    if (word == Vocabulary::kEos) break;
    StepContext ctx = make_context(static_cast<int>(d.caption.tokens.size()), out, probs);
    ctx.chosen = word;
    d.contexts.push_back(std::move(ctx));
    d.caption.tokens.push_back(word);
    h = std::move(out.hidden);
    input = word;
  }
  d.caption.pos.clear();
  for (WordId w : d.caption.tokens) d.caption.pos.push_back(vocab_->pos(w));
  return d;
}

Decoded Captioner::decode_greedy(const Scene& scene) const {
  const EncodedScene enc = encode(scene);
  Decoded d;
  d.caption.source = CaptionSource::kGreedy;
  return continue_decoding(enc, std::move(d), Eigen::VectorXd::Zero(params_.shape().width),
                           Vocabulary::kBos, 1.0, nullptr);
}

Decoded Captioner::decode_sample_with_contexts(const Scene& scene, double temperature,
                                               Rng& rng) const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const EncodedScene enc = encode(scene);
  Decoded d;
  d.caption.source = CaptionSource::kSampled;
  return continue_decoding(enc, std::move(d), Eigen::VectorXd::Zero(params_.shape().width),
                           Vocabulary::kBos, temperature, &rng);
}

Caption Captioner::decode_sample(const Scene& scene, double temperature, Rng& rng) const {
  return decode_sample_with_contexts(scene, temperature, rng).caption;
}

Decoded Captioner::rollout_from(const Scene& scene, const Decoded& base, int t,
                                WordId answer) const {
  if (t < 0 || static_cast<std::size_t>(t) >= base.contexts.size() ||
      base.contexts.size() != base.caption.tokens.size()) {
    throw std::out_of_range("rollout step outside the caption");
  }
  if (!vocab_->contains(answer)) throw std::invalid_argument("answer not in vocabulary");
  Decoded d;
  d.caption.source = CaptionSource::kRollout;
  d.caption.tokens.assign(base.caption.tokens.begin(), base.caption.tokens.begin() + t);
  d.contexts.assign(base.contexts.begin(), base.contexts.begin() + t);
  StepContext at = base.contexts[static_cast<std::size_t>(t)];
  at.chosen = answer;
  const Eigen::VectorXd h = at.hidden;
  d.contexts.push_back(std::move(at));
  d.caption.tokens.push_back(answer);
  return continue_decoding(encode(scene), std::move(d), h, answer, 1.0, nullptr);
}

Decoded Captioner::teacher_force(const Scene& scene, const Caption& caption) const {
  const EncodedScene enc = encode(scene);
  Decoded d;
  d.caption = caption;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params_.shape().width);
  WordId input = Vocabulary::kBos;
  for (std::size_t t = 0; t < caption.tokens.size(); ++t) {
    const WordId w = caption.tokens[t];
    if (!vocab_->contains(w)) throw std::invalid_argument("caption word not in vocabulary");
    StepOut out = step(enc, h, input);
    StepContext ctx = make_context(static_cast<int>(t), out, softmax(out.logits));
    ctx.chosen = w;
    d.contexts.push_back(std::move(ctx));
    h = std::move(out.hidden);
    input = w;
  }
  return d;
}

std::pair<Eigen::VectorXd, StepContext> Captioner::step_distribution(const Scene& scene,
                                                                    TokenSpan prefix) const {
  const EncodedScene enc = encode(scene);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params_.shape().width);
  WordId input = Vocabulary::kBos;
  for (WordId w : prefix) {
    if (!vocab_->contains(w)) throw std::invalid_argument("prefix word not in vocabulary");
    h = step(enc, h, input).hidden;
    input = w;
  }
  StepOut out = step(enc, h, input);
  Eigen::VectorXd probs = softmax(out.logits);
  StepContext ctx = make_context(static_cast<int>(prefix.size()), out, probs);
  return {std::move(probs), std::move(ctx)};
}

Caption replace_word(const Caption& caption, int t, WordId answer, const Vocabulary& vocab) {
  if (t < 0 || static_cast<std::size_t>(t) >= caption.tokens.size()) {
    throw std::out_of_range("replace position outside the caption");
  }
  if (!vocab.contains(answer)) throw std::invalid_argument("answer not in vocabulary");
  Caption out = caption;
  out.tokens[static_cast<std::size_t>(t)] = answer;
  out.pos.resize(out.tokens.size());
  for (std::size_t i = 0; i < out.tokens.size(); ++i) out.pos[i] = vocab.pos(out.tokens[i]);
  out.source = CaptionSource::kReplace;
  out.reward.reset();
  return out;
}

}  // namespace askcap
