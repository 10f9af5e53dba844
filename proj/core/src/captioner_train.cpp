// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "askcap/captioner.hpp"

namespace askcap {

namespace {

using P = CaptionerParams;

void softmax_inplace(Eigen::Ref<Eigen::VectorXd> v) {
  v = (v.array() - v.maxCoeff()).exp().matrix();
  v /= v.sum();
}

double scheduled(double start, double step, int every, int epoch) {
  if (every <= 0) return std::clamp(start, 0.0, 1.0);
  return std::clamp(start + step * static_cast<double>(epoch / every), 0.0, 1.0);
}

struct Adam {
  Eigen::VectorXd m, v;
  long t = 0;
  void step(Eigen::VectorXd& x, const Eigen::VectorXd& g, double lr, double b1, double b2,
            double eps) {
    if (m.size() != x.size()) {
      m = Eigen::VectorXd::Zero(x.size());
      v = Eigen::VectorXd::Zero(x.size());
    }
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    x.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

double caption_loss(const CaptionerParams& params, const EncodedScene& enc, TokenSpan words,
                     std::span<const Pos> pos, double weight, double pos_weight,
                     const ForcingPlan& plan, CaptionerParams* grad) {
  if (pos.size() != words.size()) throw std::invalid_argument("pos/words length mismatch");
  const auto& shape = params.shape();
  const Eigen::Index d = shape.width;
  const Eigen::Index J = enc.features.cols();
  const int T = static_cast<int>(words.size()) + 1;

  const auto e_in = params.view(P::kInputEmbedding);
  const auto e_out = params.view(P::kOutputEmbedding);
  const auto w_h = params.view(P::kHidden);
  const auto w_x = params.view(P::kInput);
  const auto bias = params.view(P::kBias).col(0);
  const auto u_a = params.view(P::kAttentionScore).col(0);
  const auto w_p = params.view(P::kPosHead);
  const auto b_p = params.view(P::kPosBias).col(0);
  const auto e_pos = params.view(P::kPosEmbedding);
  const auto u_pos = params.view(P::kPosToWord);
  const auto b_out = params.view(P::kWordBias).col(0);

  auto target = [&](int t) { return t < T - 1 ? words[static_cast<std::size_t>(t)] : Vocabulary::kEos; };
  auto pos_target = [&](int t) {
    return static_cast<int>(t < T - 1 ? pos[static_cast<std::size_t>(t)] : Pos::kOther);
  };
  auto gt_pos = [&](int t) {
    return static_cast<std::size_t>(t) < plan.ground_truth_pos.size() &&
           plan.ground_truth_pos[static_cast<std::size_t>(t)] != 0;
  };

  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(d, T + 1);  // hs.col(t + 1) = h_t
  std::vector<Eigen::MatrixXd> zs(static_cast<std::size_t>(T));
  Eigen::MatrixXd alphas(J, T);
  Eigen::MatrixXd pis(kNumPos, T);
  Eigen::MatrixXd gs(shape.pos_width, T);
  Eigen::MatrixXd probs(shape.vocab, T);
  std::vector<WordId> inputs(static_cast<std::size_t>(T));

  double loss = 0.0;
  for (int t = 0; t < T; ++t) {
    WordId x = Vocabulary::kBos;
    if (t > 0) {
      const bool use_pred = static_cast<std::size_t>(t) < plan.predicted_word.size() &&
                            plan.predicted_word[static_cast<std::size_t>(t)] != 0;
      x = use_pred ? static_cast<WordId>(argmax_lowest(probs.col(t - 1))) : target(t - 1);
    }
    inputs[static_cast<std::size_t>(t)] = x;
    const auto h_prev = hs.col(t);
    auto& z = zs[static_cast<std::size_t>(t)];
    z = (enc.attention.colwise() + h_prev).array().tanh().matrix();
    auto alpha = alphas.col(t);
    alpha = z.transpose() * u_a;
    softmax_inplace(alpha);
    hs.col(t + 1) = (w_h * h_prev + w_x * e_in.col(x) + enc.visual * alpha + bias).array().tanh().matrix();
    const auto h = hs.col(t + 1);
    auto pi = pis.col(t);
    pi = w_p * h + b_p;
    softmax_inplace(pi);
    if (gt_pos(t)) {
      gs.col(t) = e_pos.col(pos_target(t));
    } else {
      gs.col(t) = e_pos * pi;
    }
    auto p = probs.col(t);
    p = e_out.transpose() * h + u_pos * gs.col(t) + b_out;
    softmax_inplace(p);
    loss += -weight * std::log(std::max(p[target(t)], 1e-300));
    loss += -pos_weight * std::log(std::max(pi[pos_target(t)], 1e-300));
  }

  if (grad == nullptr) return loss;
  if (!(grad->shape() == shape)) throw std::invalid_argument("gradient shape mismatch");

  auto ge_in = grad->view(P::kInputEmbedding);
  auto ge_out = grad->view(P::kOutputEmbedding);
  auto gw_h = grad->view(P::kHidden);
  auto gw_x = grad->view(P::kInput);
  auto gbias = grad->view(P::kBias).col(0);
  auto gu_a = grad->view(P::kAttentionScore).col(0);
  auto gw_p = grad->view(P::kPosHead);
  auto gb_p = grad->view(P::kPosBias).col(0);
  auto ge_pos = grad->view(P::kPosEmbedding);
  auto gu_pos = grad->view(P::kPosToWord);
  auto gb_out = grad->view(P::kWordBias).col(0);

  Eigen::MatrixXd acc_visual = Eigen::MatrixXd::Zero(d, J);
  Eigen::MatrixXd acc_attention = Eigen::MatrixXd::Zero(d, J);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd dlogits(shape.vocab);
  for (int t = T - 1; t >= 0; --t) {
    const auto h = hs.col(t + 1);
    const auto h_prev = hs.col(t);
    const auto pi = pis.col(t);
    const auto& z = zs[static_cast<std::size_t>(t)];
    const auto alpha = alphas.col(t);

    dlogits = weight * probs.col(t);
    dlogits[target(t)] -= weight;
    gb_out += dlogits;
    ge_out.noalias() += h * dlogits.transpose();
    gu_pos.noalias() += dlogits * gs.col(t).transpose();
    Eigen::VectorXd dh = e_out * dlogits + dh_next;
    const Eigen::VectorXd dg = u_pos.transpose() * dlogits;

    Eigen::VectorXd dpi = Eigen::VectorXd::Zero(kNumPos);
    if (gt_pos(t)) {
      ge_pos.col(pos_target(t)) += dg;
    } else {
      ge_pos.noalias() += dg * pi.transpose();
      dpi = e_pos.transpose() * dg;
    }
    Eigen::VectorXd dpos = pi.cwiseProduct(dpi.array().matrix() - Eigen::VectorXd::Constant(kNumPos, pi.dot(dpi)));
    dpos += pos_weight * pi;
    dpos[pos_target(t)] -= pos_weight;
    gw_p.noalias() += dpos * h.transpose();
    gb_p += dpos;
    dh.noalias() += w_p.transpose() * dpos;

    const Eigen::VectorXd dpre = dh.array() * (1.0 - h.array().square());
    gw_h.noalias() += dpre * h_prev.transpose();
    const WordId x = inputs[static_cast<std::size_t>(t)];
    gw_x.noalias() += dpre * e_in.col(x).transpose();
    ge_in.col(x).noalias() += w_x.transpose() * dpre;
    gbias += dpre;
    acc_visual.noalias() += dpre * alpha.transpose();

    const Eigen::VectorXd dalpha = enc.visual.transpose() * dpre;
    const Eigen::VectorXd ds = alpha.array() * (dalpha.array() - alpha.dot(dalpha));
    gu_a.noalias() += z * ds;
    const Eigen::MatrixXd dzpre =
        ((u_a * ds.transpose()).array() * (1.0 - z.array().square())).matrix();
    acc_attention += dzpre;
    dh_next.noalias() = w_h.transpose() * dpre;
    dh_next += dzpre.rowwise().sum();
  }
  grad->view(P::kVisual).noalias() += acc_visual * enc.features.transpose();
  grad->view(P::kAttention).noalias() += acc_attention * enc.features.transpose();
  return loss;
}

CaptionerParams train_mle(std::span<const TrainItem> items, const Corpus& corpus,
                          const FeatureLayout& layout, const TrainConfig& config,
                          std::vector<EpochStats>* log) {
  if (config.epochs < 0 || config.batch_size <= 0 || !(config.lr > 0.0)) {
    throw ConfigError("invalid training config");
  }
  Rng rng(config.seed);
  CaptionerShape shape{static_cast<int>(corpus.vocab.size()), config.width, layout.width(),
                       config.pos_width};
  CaptionerParams params = CaptionerParams::random(shape, rng, config.init_scale);
  if (items.empty()) return params;

  std::unordered_map<int, Eigen::MatrixXd> features;
  for (const auto& item : items) {
    if (!features.contains(item.scene_id)) {
      features.emplace(item.scene_id, layout.encode(corpus.scene(item.scene_id)));
    }
    if (item.caption.tokens.size() > static_cast<std::size_t>(kMaxCaptionLength)) {
      throw std::invalid_argument("training caption longer than the maximum length");
    }
  }

  CaptionerParams grad(shape);
  Adam adam;
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::unordered_map<int, EncodedScene> encoded;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.lr * std::pow(config.lr_decay, config.lr_decay_every > 0
                                                  ? static_cast<double>(epoch / config.lr_decay_every)
                                                  : 0.0);
    const double p_word = scheduled(config.ss_word_start, config.ss_word_step, config.ss_word_every, epoch);
    const double p_pos = scheduled(config.ss_pos_start, config.ss_pos_step, config.ss_pos_every, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      grad.flat().setZero();
      encoded.clear();
      for (std::size_t k = start; k < end; ++k) {
        const TrainItem& item = items[order[k]];
        auto it = encoded.find(item.scene_id);
        if (it == encoded.end()) {
          it = encoded.emplace(item.scene_id, encode_scene(params, features.at(item.scene_id))).first;
        }
        const std::size_t steps = item.caption.tokens.size() + 1;
        ForcingPlan plan;
        plan.predicted_word.resize(steps);
        plan.ground_truth_pos.resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
          plan.predicted_word[t] = t > 0 && unit(rng) < p_word;
          plan.ground_truth_pos[t] = !(unit(rng) < p_pos);
        }
        const double loss = caption_loss(params, it->second, item.caption.tokens, item.caption.pos,
                                         item.weight * config.weight_scale, config.pos_loss_weight,
                                         plan, &grad);
        if (!std::isfinite(loss)) throw TrainingError("non-finite loss during training");
        epoch_loss += loss;
      }
      grad.flat() /= static_cast<double>(end - start);
      if (!grad.flat().allFinite()) throw TrainingError("non-finite gradient during training");
      if (config.grad_clip > 0.0) {
        const double norm = grad.flat().norm();
        if (norm > config.grad_clip) grad.flat() *= config.grad_clip / norm;
      }
      adam.step(params.flat(), grad.flat(), lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
    }
    if (log != nullptr) {
      log->push_back({epoch, epoch_loss / static_cast<double>(items.size()), lr});
    }
  }
  return params;
}

}  // namespace askcap
