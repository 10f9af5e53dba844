// Copyright 2026 The askcap Authors
// SPDX-License-Identifier: Apache-2.0

#include "askcap/decision.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "askcap/checkpoint.hpp"

namespace askcap {

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

Eigen::VectorXd logits(const PolicyParams& params, const DecisionFeatures& features) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(features.size()) + 1);
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] =
        features[i].mask ? step_logit(params, features[i]) : -std::numeric_limits<double>::infinity();
  }
  out[out.size() - 1] = params.no_ask();
  return out;
}

int to_step(Eigen::Index index, std::size_t steps) {
  return static_cast<std::size_t>(index) == steps ? kNoAsk : static_cast<int>(index);
}

Eigen::Index to_index(int t, std::size_t steps) {
  return t == kNoAsk ? static_cast<Eigen::Index>(steps) : static_cast<Eigen::Index>(t);
}

}  // namespace

Eigen::VectorXd StepFeatures::vector() const {
  Eigen::VectorXd v(vector_size(static_cast<int>(caption_enc.size())));
  Eigen::Index k = 0;
  for (double p : pos_dist) v[k++] = p;
  v[k++] = entropy_topk;
  for (double c : closeness) v[k++] = c;
  v.segment(k, caption_enc.size()) = caption_enc;
  k += caption_enc.size();
  v[k] = position;
  return v;
}

double topk_entropy(std::span<const std::pair<WordId, double>> topk) {
  double total = 0.0;
  for (const auto& [w, p] : topk) total += p;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (const auto& [w, p] : topk) {
    const double q = p / total;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

DecisionFeatures featurize(std::span<const StepContext> contexts, const Caption& caption,
                           const Eigen::Ref<const Eigen::MatrixXd>& embeddings) {
  const Eigen::Index d = embeddings.rows();
  Eigen::VectorXd sentence = Eigen::VectorXd::Zero(d);
  for (WordId w : caption.tokens) sentence += embeddings.col(w);
  const Eigen::VectorXd mean_enc =
      caption.tokens.empty() ? sentence : Eigen::VectorXd(sentence / static_cast<double>(caption.tokens.size()));
  const double length = static_cast<double>(std::max<std::size_t>(caption.tokens.size(), 1));

  DecisionFeatures out;
  out.reserve(contexts.size());
  for (const auto& ctx : contexts) {
    StepFeatures f;
    f.pos_dist = ctx.pos_dist;
    f.entropy_topk = topk_entropy(ctx.topk);
    const std::size_t k = std::min<std::size_t>(ctx.topk.size(), kTopK);
    std::vector<Eigen::VectorXd> e;
    for (std::size_t i = 0; i < k; ++i) e.emplace_back(embeddings.col(ctx.topk[i].first));
    for (std::size_t i = 0; i < k; ++i) {
      f.closeness[i] = cosine(e[0], e[i]);
      f.closeness[kTopK + i] = cosine(e[i], sentence);
      double best = k > 1 ? std::numeric_limits<double>::infinity() : 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != i) best = std::min(best, (e[i] - e[j]).norm());
      }
      f.closeness[2 * kTopK + i] = best;
    }
    f.caption_enc = mean_enc;
    f.position = static_cast<double>(ctx.t) / length;
    f.mask = ctx.t >= 0 && static_cast<std::size_t>(ctx.t) < caption.tokens.size() &&
             askable(ctx.predicted_pos());
    out.push_back(std::move(f));
  }
  return out;
}

PolicyParams::PolicyParams(int input, int hidden) : input_(input), hidden_(hidden) {
  if (input <= 0 || hidden <= 0) throw ConfigError("invalid policy shape");
  data_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden) * (input + 2) + 2);
}

PolicyParams PolicyParams::random(int input, int hidden, Rng& rng, double scale) {
  PolicyParams p(input, hidden);
  std::normal_distribution<double> normal(0.0, scale);
  for (Eigen::Index i = 0; i < p.w1().size(); ++i) p.w1().data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < p.w2().size(); ++i) p.w2()[i] = normal(rng);
  return p;
}

double step_logit(const PolicyParams& params, const StepFeatures& f) {
  const Eigen::VectorXd x = f.vector();
  if (x.size() != params.input()) throw std::invalid_argument("feature size does not match policy");
  const Eigen::VectorXd h = (params.w1() * x + params.b1()).array().tanh().matrix();
  return params.w2().dot(h) + params.b2();
}

Eigen::VectorXd policy_forward(const PolicyParams& params, const DecisionFeatures& features) {
  Eigen::VectorXd l = logits(params, features);
  const double top = l.maxCoeff();
  Eigen::VectorXd p(l.size());
  for (Eigen::Index i = 0; i < l.size(); ++i) p[i] = std::isinf(l[i]) ? 0.0 : std::exp(l[i] - top);
  return p / p.sum();
}

AskDecision choose(const PolicyParams& params, const DecisionFeatures& features, ChooseMode mode,
                   Rng& rng) {
  const Eigen::VectorXd p = policy_forward(params, features);
  Eigen::Index pick = argmax_lowest(p);
  if (mode == ChooseMode::kSample) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    pick = p.size() - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      acc += p[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
  }
  return {to_step(pick, features.size()), std::log(p[pick]), mode == ChooseMode::kSample};
}

Eigen::VectorXd log_prob_gradient(const PolicyParams& params, const DecisionFeatures& features,
                                  int t) {
  const Eigen::VectorXd p = policy_forward(params, features);
  const Eigen::Index chosen = to_index(t, features.size());
  if (chosen < 0 || chosen >= p.size() || p[chosen] <= 0.0) {
    throw std::invalid_argument("log-prob gradient of an impossible choice");
  }
  PolicyParams grad(params.input(), params.hidden());
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!features[i].mask) continue;
    const auto idx = static_cast<Eigen::Index>(i);
    const double dl = (idx == chosen ? 1.0 : 0.0) - p[idx];
    const Eigen::VectorXd x = features[i].vector();
    const Eigen::VectorXd h = (params.w1() * x + params.b1()).array().tanh().matrix();
    grad.w2() += dl * h;
    grad.b2() += dl;
    const Eigen::VectorXd dpre = (dl * params.w2()).array() * (1.0 - h.array().square());
    grad.w1().noalias() += dpre * x.transpose();
    grad.b1() += dpre;
  }
  const Eigen::Index n = p.size() - 1;
  grad.no_ask() = (chosen == n ? 1.0 : 0.0) - p[n];
  return grad.flat();
}

Eigen::VectorXd reinforce_update(PolicyParams& params, const AskDecision& decision, double r,
                                 double r_star, const DecisionFeatures& features, double lr) {
  if (!decision.sampled) throw std::invalid_argument("REINFORCE needs a sampled decision");
  const double advantage = r - r_star;
  if (advantage == 0.0) return Eigen::VectorXd::Zero(params.flat().size());
  const Eigen::VectorXd grad = log_prob_gradient(params, features, decision.t);
  if (!grad.allFinite()) throw std::runtime_error("non-finite policy gradient");
  Eigen::VectorXd delta = (lr * advantage) * grad;
  params.flat() += delta;
  return delta;
}

double closeness_score(const StepFeatures& f) {
  double spread = 0.0;
  for (int i = 1; i < kTopK; ++i) spread += 1.0 - f.closeness[static_cast<std::size_t>(i)];
  return f.entropy_topk + spread / (kTopK - 1);
}

AskDecision heuristic_choose(const DecisionFeatures& features, Heuristic strategy, Rng& rng) {
  std::vector<int> open;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].mask) open.push_back(static_cast<int>(i));
  }
  if (open.empty()) return {kNoAsk, 0.0, false};
  if (strategy == Heuristic::kRandom) {
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return {open[pick(rng)], -std::log(static_cast<double>(open.size())), true};
  }
  int best = open.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i : open) {
    const auto& f = features[static_cast<std::size_t>(i)];
    const double s = strategy == Heuristic::kMaxEntropy ? f.entropy_topk : closeness_score(f);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return {best, 0.0, false};
}

void save_policy(const std::filesystem::path& path, const PolicyParams& params) {
  write_blob(path, {"policy", {params.input(), params.hidden()}, params.flat()});
}

PolicyParams load_policy(const std::filesystem::path& path, const PolicyParams* expected_shape) {
  Blob blob = read_blob(path);
  if (blob.kind != "policy" || blob.dims.size() != 2) {
    throw CheckpointError(path.string() + ": not a policy checkpoint");
  }
  const int input = static_cast<int>(blob.dims[0]), hidden = static_cast<int>(blob.dims[1]);
  if (expected_shape != nullptr &&
      (expected_shape->input() != input || expected_shape->hidden() != hidden)) {
    throw CheckpointError(path.string() + ": policy shape mismatch");
  }
  if (input <= 0 || hidden <= 0) throw CheckpointError(path.string() + ": invalid policy shape");
  PolicyParams params(input, hidden);
  if (params.flat().size() != blob.data.size()) {
    throw CheckpointError(path.string() + ": parameter count mismatch");
  }
  params.flat() = std::move(blob.data);
  return params;
}

}  // namespace askcap
