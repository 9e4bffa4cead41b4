#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prooftrain/corpus.hpp"
#include "prooftrain/errors.hpp"
#include "prooftrain/features.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/kernel.hpp"
#include "prooftrain/rng.hpp"

namespace prooftrain {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow; -log(sigmoid(x)) == softplus(-x).
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// Linear softmax over the applicable tactics of a state, with hashed
// (state, tactic) features and a fixed sampling temperature.
struct TacticPolicy {
  std::string id = "policy";
  std::uint32_t dim = 256;
  double temperature = 1.0;
  std::vector<double> w;
};

inline TacticPolicy make_policy(std::uint64_t seed, std::uint32_t dim = 256,
                                double temperature = 1.0, std::string id = "policy") {
  if (dim == 0) raise(Errc::InvalidConfig, "feature dim must be positive");
  if (!(temperature > 0.0)) raise(Errc::InvalidConfig, "temperature must be positive");
  TacticPolicy p;
  p.id = std::move(id);
  p.dim = dim;
  p.temperature = temperature;
  p.w.assign(dim, 0.0);
  Rng rng(Rng::derive(seed, "policy_init"));
  double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : p.w) x = sigma * rng.gaussian();
  return p;
}

// The policy's full view of one state: applicable tactics in canonical order,
// their features, and the softmax over them.
struct TacticDistribution {
  std::vector<Tactic> tactics;
  std::vector<FeatureVec> feats;
  std::vector<double> logits;
  std::vector<double> probs;
  double log_z = 0.0;
};

namespace detail {

inline void softmax_fill(std::span<const double> logits, std::vector<double>& probs,
                         double& log_z) {
  probs.assign(logits.size(), 0.0);
  if (logits.empty()) {
    log_z = 0.0;
    return;
  }
  double m = logits[0];
  for (double l : logits) m = std::max(m, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  log_z = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) probs[i] = std::exp(logits[i] - log_z);
}

}  // namespace detail

inline TacticDistribution policy_distribution(const TacticPolicy& p, const ProofState& s) {
  TacticDistribution d;
  d.tactics = enumerate_tactics(s);
  d.feats.reserve(d.tactics.size());
  d.logits.reserve(d.tactics.size());
  StateContext ctx = make_context(s);
  for (const Tactic& t : d.tactics) {
    d.feats.push_back(state_tactic_features(s, ctx, t, p.dim));
    d.logits.push_back(dot(d.feats.back(), p.w) / p.temperature);
  }
  detail::softmax_fill(d.logits, d.probs, d.log_z);
  return d;
}

inline double log_prob(const TacticDistribution& d, std::size_t index) {
  return d.logits[index] - d.log_z;
}

inline std::size_t find_tactic(const TacticDistribution& d, const Tactic& t) {
  for (std::size_t i = 0; i < d.tactics.size(); ++i)
    if (d.tactics[i] == t) return i;
  raise(Errc::TacticNotApplicable, "tactic not applicable here: " + to_string(t));
}

inline double policy_log_prob(const TacticPolicy& p, const ProofState& s, const Tactic& t) {
  TacticDistribution d = policy_distribution(p, s);
  return log_prob(d, find_tactic(d, t));
}

inline std::size_t sample_index(const TacticDistribution& d, Rng& rng) {
  return rng.categorical(d.probs);
}

// Distributions memoized on the goal list (step counters do not affect the
// policy). Valid only while the policy weights stay fixed; create one per
// search or scoring pass.
struct PolicyEvalCache {
  std::unordered_map<std::string, std::shared_ptr<const TacticDistribution>> entries;
  std::size_t hits = 0, misses = 0;
};

inline std::string goals_key(const ProofState& s) {
  if (s.goals.empty()) return "proved";
  std::string out;
  for (std::size_t i = 0; i < s.goals.size(); ++i) {
    if (i > 0) out += " ;; ";
    out += to_string(s.goals[i]);
  }
  return out;
}

inline std::shared_ptr<const TacticDistribution> get_distribution(const TacticPolicy& p,
                                                                  const ProofState& s,
                                                                  PolicyEvalCache* cache) {
  if (cache == nullptr)
    return std::make_shared<const TacticDistribution>(policy_distribution(p, s));
  std::string key = goals_key(s);
  auto it = cache->entries.find(key);
  if (it != cache->entries.end()) {
    ++cache->hits;
    return it->second;
  }
  ++cache->misses;
  auto dist = std::make_shared<const TacticDistribution>(policy_distribution(p, s));
  cache->entries.emplace(std::move(key), dist);
  return dist;
}

// ---------------------------------------------------------------------------
// Supervised fitting: full-batch gradient descent on mean negative log
// likelihood of the recorded tactic. Convex in the weights for this model.

struct SftConfig {
  int epochs = 30;
  double lr = 0.5;
};

struct FitStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // loss before each update, then final
};

namespace detail {

struct SftExample {
  std::vector<FeatureVec> cand_feats;
  std::vector<double> logits;  // scratch
  std::size_t target = 0;
};

inline std::vector<SftExample> prepare_sft(const TacticPolicy& p, std::span<const Triplet> data) {
  if (data.empty()) raise(Errc::EmptyDataset, "no training triplets");
  std::vector<SftExample> out;
  out.reserve(data.size());
  for (const Triplet& tr : data) {
    SftExample ex;
    StateContext ctx = make_context(tr.state);
    std::vector<Tactic> cands = enumerate_tactics(tr.state);
    bool found = false;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      ex.cand_feats.push_back(state_tactic_features(tr.state, ctx, cands[j], p.dim));
      if (cands[j] == tr.tactic) {
        ex.target = j;
        found = true;
      }
    }
    if (!found)
      raise(Errc::TacticNotApplicable,
            "recorded tactic not applicable: " + to_string(tr.tactic) + " at " + to_string(tr.state));
    ex.logits.assign(ex.cand_feats.size(), 0.0);
    out.push_back(std::move(ex));
  }
  return out;
}

// Mean NLL; accumulates the gradient into `grad` when non-null.
inline double sft_pass(const TacticPolicy& p, std::vector<SftExample>& exs,
                       std::vector<double>* grad) {
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(exs.size());
  std::vector<double> probs;
  for (SftExample& ex : exs) {
    for (std::size_t j = 0; j < ex.cand_feats.size(); ++j)
      ex.logits[j] = dot(ex.cand_feats[j], p.w) / p.temperature;
    double log_z;
    softmax_fill(ex.logits, probs, log_z);
    loss += (log_z - ex.logits[ex.target]) * inv_n;
    if (grad != nullptr) {
      for (std::size_t j = 0; j < ex.cand_feats.size(); ++j) {
        double coef = (probs[j] - (j == ex.target ? 1.0 : 0.0)) * inv_n / p.temperature;
        if (coef != 0.0) axpy(coef, ex.cand_feats[j], *grad);
      }
    }
  }
  if (!std::isfinite(loss)) raise(Errc::NonFiniteLoss, "sft loss diverged");
  return loss;
}

}  // namespace detail

inline double sft_loss(const TacticPolicy& p, std::span<const Triplet> data) {
  std::vector<detail::SftExample> exs = detail::prepare_sft(p, data);
  return detail::sft_pass(p, exs, nullptr);
}

inline std::vector<double> sft_gradient(const TacticPolicy& p, std::span<const Triplet> data) {
  std::vector<detail::SftExample> exs = detail::prepare_sft(p, data);
  std::vector<double> grad(p.dim, 0.0);
  detail::sft_pass(p, exs, &grad);
  return grad;
}

inline FitStats sft_fit(TacticPolicy& p, std::span<const Triplet> data, const SftConfig& cfg) {
  if (cfg.epochs < 0 || !(cfg.lr > 0.0)) raise(Errc::InvalidConfig, "bad sft config");
  std::vector<detail::SftExample> exs = detail::prepare_sft(p, data);
  FitStats stats;
  std::vector<double> grad(p.dim, 0.0);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = detail::sft_pass(p, exs, &grad);
    stats.epoch_loss.push_back(loss);
    if (e == 0) stats.initial_loss = loss;
    for (std::uint32_t i = 0; i < p.dim; ++i) p.w[i] -= cfg.lr * grad[i];
  }
  stats.final_loss = detail::sft_pass(p, exs, nullptr);
  if (cfg.epochs == 0) stats.initial_loss = stats.final_loss;
  stats.epoch_loss.push_back(stats.final_loss);
  return stats;
}

// ---------------------------------------------------------------------------
// Score regression: sigmoid of a linear score over the same features, fit by
// mean squared error against observed tactic scores in [0, 1].

struct ScoreRegressor {
  std::string id = "regressor";
  std::uint32_t dim = 256;
  std::vector<double> v;
  bool fitted = false;
};

inline ScoreRegressor make_regressor(std::uint32_t dim = 256, std::string id = "regressor") {
  if (dim == 0) raise(Errc::InvalidConfig, "feature dim must be positive");
  ScoreRegressor r;
  r.id = std::move(id);
  r.dim = dim;
  r.v.assign(dim, 0.0);
  return r;
}

struct ScoredExample {
  ProofState state;
  Tactic tactic;
  double score = 0.0;
};

struct RegConfig {
  int epochs = 200;
  double lr = 2.0;
};

inline double regressor_predict(const ScoreRegressor& r, const ProofState& s, const Tactic& t) {
  if (!r.fitted) raise(Errc::UnfittedRegressor, "regressor has not been fit");
  return sigmoid(dot(state_tactic_features(s, t, r.dim), r.v));
}

namespace detail {

struct RegExample {
  FeatureVec feats;
  double score;
};

inline std::vector<RegExample> prepare_reg(const ScoreRegressor& r,
                                           std::span<const ScoredExample> data) {
  if (data.empty()) raise(Errc::EmptyDataset, "no regression examples");
  std::vector<RegExample> out;
  out.reserve(data.size());
  for (const ScoredExample& ex : data) {
    if (!(ex.score >= 0.0 && ex.score <= 1.0))
      raise(Errc::ScoreOutOfRange, "score " + std::to_string(ex.score) + " outside [0, 1]");
    out.push_back(RegExample{state_tactic_features(ex.state, ex.tactic, r.dim), ex.score});
  }
  return out;
}

inline double reg_pass(const ScoreRegressor& r, const std::vector<RegExample>& exs,
                       std::vector<double>* grad) {
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(exs.size());
  for (const RegExample& ex : exs) {
    double y_hat = sigmoid(dot(ex.feats, r.v));
    double err = y_hat - ex.score;
    loss += err * err * inv_n;
    if (grad != nullptr) axpy(2.0 * err * y_hat * (1.0 - y_hat) * inv_n, ex.feats, *grad);
  }
  if (!std::isfinite(loss)) raise(Errc::NonFiniteLoss, "regression loss diverged");
  return loss;
}

}  // namespace detail

inline double regressor_loss(const ScoreRegressor& r, std::span<const ScoredExample> data) {
  std::vector<detail::RegExample> exs = detail::prepare_reg(r, data);
  return detail::reg_pass(r, exs, nullptr);
}

inline std::vector<double> regressor_gradient(const ScoreRegressor& r,
                                              std::span<const ScoredExample> data) {
  std::vector<detail::RegExample> exs = detail::prepare_reg(r, data);
  std::vector<double> grad(r.dim, 0.0);
  detail::reg_pass(r, exs, &grad);
  return grad;
}

inline FitStats regressor_fit(ScoreRegressor& r, std::span<const ScoredExample> data,
                              const RegConfig& cfg) {
  if (cfg.epochs < 0 || !(cfg.lr > 0.0)) raise(Errc::InvalidConfig, "bad regression config");
  std::vector<detail::RegExample> exs = detail::prepare_reg(r, data);
  FitStats stats;
  std::vector<double> grad(r.dim, 0.0);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = detail::reg_pass(r, exs, &grad);
    stats.epoch_loss.push_back(loss);
    if (e == 0) stats.initial_loss = loss;
    for (std::uint32_t i = 0; i < r.dim; ++i) r.v[i] -= cfg.lr * grad[i];
  }
  stats.final_loss = detail::reg_pass(r, exs, nullptr);
  if (cfg.epochs == 0) stats.initial_loss = stats.final_loss;
  stats.epoch_loss.push_back(stats.final_loss);
  r.fitted = true;
  return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints. One little-endian binary format for both model kinds:
//
//   8 bytes  magic "PTCKPT01"
//   u8       kind: 0 = policy, 1 = regressor
//   u8       fitted flag
//   u32      id length, then the id bytes
//   u32      feature dim
//   f64      temperature (1.0 for regressors)
//   f64[dim] weights

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
  std::string_view data;
  std::size_t pos = 0;

  void need(std::size_t n, const std::filesystem::path& path) const {
    if (pos + n > data.size()) raise(Errc::ParseError, "truncated checkpoint: " + path.string());
  }
  std::uint8_t u8(const std::filesystem::path& path) {
    need(1, path);
    return static_cast<std::uint8_t>(data[pos++]);
  }
  std::uint32_t u32(const std::filesystem::path& path) {
    need(4, path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    return v;
  }
  double f64(const std::filesystem::path& path) {
    need(8, path);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos++])) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n, const std::filesystem::path& path) {
    need(n, path);
    std::string out(data.substr(pos, n));
    pos += n;
    return out;
  }
};

inline constexpr std::string_view kCheckpointMagic = "PTCKPT01";

inline std::string encode_checkpoint(std::uint8_t kind, std::uint8_t fitted, const std::string& id,
                                     std::uint32_t dim, double temperature,
                                     const std::vector<double>& weights) {
  std::string out;
  out += kCheckpointMagic;
  out.push_back(static_cast<char>(kind));
  out.push_back(static_cast<char>(fitted));
  put_u32(out, static_cast<std::uint32_t>(id.size()));
  out += id;
  put_u32(out, dim);
  put_f64(out, temperature);
  for (double w : weights) put_f64(out, w);
  return out;
}

struct DecodedCheckpoint {
  std::uint8_t kind = 0, fitted = 0;
  std::string id;
  std::uint32_t dim = 0;
  double temperature = 1.0;
  std::vector<double> weights;
};

inline DecodedCheckpoint decode_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    raise(Errc::MissingCheckpoint, "no checkpoint at " + path.string());
  std::string blob = read_file(path);
  ByteReader r{blob};
  if (r.bytes(kCheckpointMagic.size(), path) != kCheckpointMagic)
    raise(Errc::ParseError, "bad checkpoint magic: " + path.string());
  DecodedCheckpoint c;
  c.kind = r.u8(path);
  c.fitted = r.u8(path);
  std::uint32_t id_len = r.u32(path);
  c.id = r.bytes(id_len, path);
  c.dim = r.u32(path);
  c.temperature = r.f64(path);
  c.weights.resize(c.dim);
  for (std::uint32_t i = 0; i < c.dim; ++i) c.weights[i] = r.f64(path);
  if (r.pos != blob.size()) raise(Errc::ParseError, "trailing bytes in " + path.string());
  return c;
}

}  // namespace detail

inline void save_policy(const std::filesystem::path& path, const TacticPolicy& p) {
  write_file(path, detail::encode_checkpoint(0, 1, p.id, p.dim, p.temperature, p.w));
}

inline TacticPolicy load_policy(const std::filesystem::path& path) {
  detail::DecodedCheckpoint c = detail::decode_checkpoint(path);
  if (c.kind != 0) raise(Errc::ParseError, "not a policy checkpoint: " + path.string());
  TacticPolicy p;
  p.id = std::move(c.id);
  p.dim = c.dim;
  p.temperature = c.temperature;
  p.w = std::move(c.weights);
  return p;
}

inline void save_regressor(const std::filesystem::path& path, const ScoreRegressor& r) {
  write_file(path, detail::encode_checkpoint(1, r.fitted ? 1 : 0, r.id, r.dim, 1.0, r.v));
}

inline ScoreRegressor load_regressor(const std::filesystem::path& path) {
  detail::DecodedCheckpoint c = detail::decode_checkpoint(path);
  if (c.kind != 1) raise(Errc::ParseError, "not a regressor checkpoint: " + path.string());
  ScoreRegressor r;
  r.id = std::move(c.id);
  r.dim = c.dim;
  r.v = std::move(c.weights);
  r.fitted = c.fitted != 0;
  return r;
}

}  // namespace prooftrain
