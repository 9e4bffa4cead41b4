#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "prooftrain/errors.hpp"
#include "prooftrain/pairing.hpp"
#include "prooftrain/policy.hpp"

namespace prooftrain {

struct DpoConfig {
  double beta = 0.1;
  double lr = 0.5;
  int epochs = 1;
};

namespace detail {

struct DpoExample {
  FeatureVec feat_w, feat_l;
  double ref_logit_gap = 0.0;  // (z_ref(w) - z_ref(l)); the partition terms cancel
};

// Both tactics of a pair live in the same state, so log pi(w) - log pi(l)
// reduces to the logit gap: the normalizer is shared and drops out. The loss
// per pair is then softplus(-beta * (theta gap - ref gap)), exactly the
// preference loss on full log probabilities.
inline std::vector<DpoExample> prepare_dpo(const TacticPolicy& theta, const TacticPolicy& ref,
                                           std::span<const PreferencePair> pairs) {
  if (pairs.empty()) raise(Errc::EmptyPairs, "no preference pairs");
  if (theta.dim != ref.dim || theta.temperature != ref.temperature)
    raise(Errc::InvalidConfig, "policy and reference disagree on dim or temperature");
  std::vector<DpoExample> out;
  out.reserve(pairs.size());
  for (const PreferencePair& p : pairs) {
    StateContext ctx = make_context(p.state);
    DpoExample ex;
    ex.feat_w = state_tactic_features(p.state, ctx, p.chosen, theta.dim);
    ex.feat_l = state_tactic_features(p.state, ctx, p.rejected, theta.dim);
    ex.ref_logit_gap =
        (dot(ex.feat_w, ref.w) - dot(ex.feat_l, ref.w)) / ref.temperature;
    out.push_back(std::move(ex));
  }
  return out;
}

inline double dpo_pass(const TacticPolicy& theta, const std::vector<DpoExample>& exs, double beta,
                       std::vector<double>* grad) {
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(exs.size());
  for (const DpoExample& ex : exs) {
    double theta_gap = (dot(ex.feat_w, theta.w) - dot(ex.feat_l, theta.w)) / theta.temperature;
    double margin = beta * (theta_gap - ex.ref_logit_gap);
    loss += softplus(-margin) * inv_n;
    if (grad != nullptr) {
      double coef = -sigmoid(-margin) * beta * inv_n / theta.temperature;
      axpy(coef, ex.feat_w, *grad);
      axpy(-coef, ex.feat_l, *grad);
    }
  }
  if (!std::isfinite(loss)) raise(Errc::NonFiniteLoss, "preference loss diverged");
  return loss;
}

}  // namespace detail

inline double dpo_loss(const TacticPolicy& theta, const TacticPolicy& ref,
                       std::span<const PreferencePair> pairs, double beta) {
  if (!(beta > 0.0)) raise(Errc::InvalidConfig, "beta must be positive");
  std::vector<detail::DpoExample> exs = detail::prepare_dpo(theta, ref, pairs);
  return detail::dpo_pass(theta, exs, beta, nullptr);
}

inline std::vector<double> dpo_grad(const TacticPolicy& theta, const TacticPolicy& ref,
                                    std::span<const PreferencePair> pairs, double beta) {
  if (!(beta > 0.0)) raise(Errc::InvalidConfig, "beta must be positive");
  std::vector<detail::DpoExample> exs = detail::prepare_dpo(theta, ref, pairs);
  std::vector<double> grad(theta.dim, 0.0);
  detail::dpo_pass(theta, exs, beta, &grad);
  return grad;
}

inline FitStats dpo_fit(TacticPolicy& theta, const TacticPolicy& ref,
                        std::span<const PreferencePair> pairs, const DpoConfig& cfg) {
  if (!(cfg.beta > 0.0) || cfg.epochs < 0 || !(cfg.lr > 0.0))
    raise(Errc::InvalidConfig, "bad preference training config");
  std::vector<detail::DpoExample> exs = detail::prepare_dpo(theta, ref, pairs);
  FitStats stats;
  std::vector<double> grad(theta.dim, 0.0);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = detail::dpo_pass(theta, exs, cfg.beta, &grad);
    stats.epoch_loss.push_back(loss);
    if (e == 0) stats.initial_loss = loss;
    for (std::uint32_t i = 0; i < theta.dim; ++i) theta.w[i] -= cfg.lr * grad[i];
  }
  stats.final_loss = detail::dpo_pass(theta, exs, cfg.beta, nullptr);
  if (cfg.epochs == 0) stats.initial_loss = stats.final_loss;
  stats.epoch_loss.push_back(stats.final_loss);
  return stats;
}

}  // namespace prooftrain
