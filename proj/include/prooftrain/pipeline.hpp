#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "prooftrain/corpus.hpp"
#include "prooftrain/dpo.hpp"
#include "prooftrain/errors.hpp"
#include "prooftrain/io.hpp"
#include "prooftrain/pairing.hpp"
#include "prooftrain/policy.hpp"
#include "prooftrain/scoring.hpp"
#include "prooftrain/search.hpp"

namespace prooftrain {

// Every knob of a full run. Time-like budgets are deterministic node counts;
// the wall-clock caps exist as safety nets and are sized so they never bind
// on sane hardware (binding one would cost reproducibility).
struct RunConfig {
  // corpus
  int n_theorems = 2000;
  double held_out_frac = 0.2;
  int gen_max_depth = 7;
  int term_depth = 4;
  int max_vars = 3;
  double hyp_prob = 0.25;
  int max_hyps = 2;
  int max_term_size = 48;
  int max_tries = 200;

  // model
  int feature_dim = 256;
  double temperature = 1.0;

  // imitation fit
  int sft_epochs = 40;
  double sft_lr = 0.5;

  // scoring
  int n_candidates = 32;
  int n_attempt = 10;
  int subset_size = 48;
  int mcts_simulations = 64;
  int mcts_depth = 10;
  double mcts_seconds = 60.0;
  double c_puct = 1.0;
  double budget_growth = 1.5;  // scoring simulations grow by this per iteration

  // score generator
  int reg_epochs = 200;
  double reg_lr = 2.0;

  // pairing
  double threshold = 0.5;
  bool allow_dual_role = false;
  bool same_provenance_only = false;
  int max_pairs_per_state = 0;

  // preference tuning
  double beta = 0.1;
  double dpo_lr = 0.5;
  int dpo_epochs = 1;

  // curriculum loop
  int iterations = 4;
  int min_bucket = 1;       // skip buckets smaller than this
  bool early_stop = false;  // stop when held-out pass@1 stops improving

  // evaluation
  int eval_k = 1;
  int eval_expansions = 16;
  int eval_depth = 10;
  double eval_seconds = 300.0;
  int eval_top_k = 32;

  std::uint64_t seed = 1;
  std::string out_dir = "run";
  double node_cost_seconds = 0.001;  // deterministic per-node cost model
};

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, `#` comments. One table drives parsing,
// defaults, and the resolved config written next to the outputs.

namespace detail {

using ConfigMember =
    std::variant<int RunConfig::*, double RunConfig::*, bool RunConfig::*,
                 std::uint64_t RunConfig::*, std::string RunConfig::*>;

struct ConfigField {
  const char* name;
  ConfigMember member;
};

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"n_theorems", &RunConfig::n_theorems},
      {"held_out_frac", &RunConfig::held_out_frac},
      {"gen_max_depth", &RunConfig::gen_max_depth},
      {"term_depth", &RunConfig::term_depth},
      {"max_vars", &RunConfig::max_vars},
      {"hyp_prob", &RunConfig::hyp_prob},
      {"max_hyps", &RunConfig::max_hyps},
      {"max_term_size", &RunConfig::max_term_size},
      {"max_tries", &RunConfig::max_tries},
      {"feature_dim", &RunConfig::feature_dim},
      {"temperature", &RunConfig::temperature},
      {"sft_epochs", &RunConfig::sft_epochs},
      {"sft_lr", &RunConfig::sft_lr},
      {"n_candidates", &RunConfig::n_candidates},
      {"n_attempt", &RunConfig::n_attempt},
      {"subset_size", &RunConfig::subset_size},
      {"mcts_simulations", &RunConfig::mcts_simulations},
      {"mcts_depth", &RunConfig::mcts_depth},
      {"mcts_seconds", &RunConfig::mcts_seconds},
      {"c_puct", &RunConfig::c_puct},
      {"budget_growth", &RunConfig::budget_growth},
      {"reg_epochs", &RunConfig::reg_epochs},
      {"reg_lr", &RunConfig::reg_lr},
      {"threshold", &RunConfig::threshold},
      {"allow_dual_role", &RunConfig::allow_dual_role},
      {"same_provenance_only", &RunConfig::same_provenance_only},
      {"max_pairs_per_state", &RunConfig::max_pairs_per_state},
      {"beta", &RunConfig::beta},
      {"dpo_lr", &RunConfig::dpo_lr},
      {"dpo_epochs", &RunConfig::dpo_epochs},
      {"iterations", &RunConfig::iterations},
      {"min_bucket", &RunConfig::min_bucket},
      {"early_stop", &RunConfig::early_stop},
      {"eval_k", &RunConfig::eval_k},
      {"eval_expansions", &RunConfig::eval_expansions},
      {"eval_depth", &RunConfig::eval_depth},
      {"eval_seconds", &RunConfig::eval_seconds},
      {"eval_top_k", &RunConfig::eval_top_k},
      {"seed", &RunConfig::seed},
      {"out_dir", &RunConfig::out_dir},
      {"node_cost_seconds", &RunConfig::node_cost_seconds},
  };
  return fields;
}

inline std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline void set_config_field(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const detail::ConfigField& f : detail::config_fields()) {
    if (key != f.name) continue;
    try {
      std::visit(
          [&](auto member) {
            using T = std::remove_cvref_t<decltype(cfg.*member)>;
            if constexpr (std::is_same_v<T, int>) {
              cfg.*member = std::stoi(value);
            } else if constexpr (std::is_same_v<T, double>) {
              cfg.*member = std::stod(value);
            } else if constexpr (std::is_same_v<T, bool>) {
              if (value == "true" || value == "1") {
                cfg.*member = true;
              } else if (value == "false" || value == "0") {
                cfg.*member = false;
              } else {
                throw std::invalid_argument("bool");
              }
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
              cfg.*member = std::stoull(value);
            } else {
              cfg.*member = value;
            }
          },
          f.member);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      raise(Errc::InvalidConfig, "bad value for " + key + ": " + value);
    }
    return;
  }
  raise(Errc::InvalidConfig, "unknown config key: " + key);
}

inline std::string resolved_config_text(const RunConfig& cfg) {
  std::string out;
  char buf[64];
  for (const detail::ConfigField& f : detail::config_fields()) {
    out += f.name;
    out += " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, int>) {
            out += std::to_string(cfg.*member);
          } else if constexpr (std::is_same_v<T, double>) {
            std::snprintf(buf, sizeof buf, "%.17g", cfg.*member);
            out += buf;
          } else if constexpr (std::is_same_v<T, bool>) {
            out += (cfg.*member) ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            out += std::to_string(cfg.*member);
          } else {
            out += cfg.*member;
          }
        },
        f.member);
    out += '\n';
  }
  return out;
}

inline RunConfig parse_config_file(const std::filesystem::path& path) {
  RunConfig cfg;
  std::string text = read_file(path);
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = detail::trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      raise(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    set_config_field(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline void validate_config(const RunConfig& c) {
  if (c.n_theorems <= 0 || c.gen_max_depth <= 0 || c.max_vars <= 0 || c.feature_dim <= 0 ||
      c.iterations < 0 || c.n_attempt <= 0 || c.n_candidates <= 0 || c.eval_k <= 0 ||
      c.eval_top_k <= 0 || c.mcts_simulations <= 0 || c.mcts_depth <= 0 || c.eval_depth <= 0 ||
      c.subset_size <= 0 || c.min_bucket < 1) {
    raise(Errc::InvalidConfig, "counts must be positive");
  }
  if (!(c.temperature > 0.0) || !(c.beta > 0.0) || !(c.budget_growth > 0.0) ||
      !(c.node_cost_seconds >= 0.0)) {
    raise(Errc::InvalidConfig, "temperature, beta and budget_growth must be positive");
  }
  if (!(c.held_out_frac >= 0.0 && c.held_out_frac < 1.0))
    raise(Errc::InvalidConfig, "held_out_frac must be in [0, 1)");
  if (!(c.threshold > 0.0 && c.threshold <= 1.0))
    raise(Errc::InvalidThreshold, "threshold must lie in (0, 1]");
  if (c.out_dir.empty()) raise(Errc::InvalidConfig, "out_dir must be set");
}

// ---------------------------------------------------------------------------
// Derived budgets. The scoring budget grows per iteration (deterministic
// analogue of giving later, harder buckets more search time).

inline SearchBudget scoring_budget(const RunConfig& c, int iteration) {
  SearchBudget b;
  b.max_simulations = static_cast<int>(std::ceil(
      c.mcts_simulations * std::pow(c.budget_growth, std::max(iteration - 1, 0))));
  b.max_depth = c.mcts_depth;
  b.max_expansions = 1 << 30;
  b.max_seconds = c.mcts_seconds;
  return b;
}

inline SearchBudget eval_budget(const RunConfig& c) {
  SearchBudget b;
  b.max_simulations = 1;  // unused by best-first
  b.max_depth = c.eval_depth;
  b.max_expansions = c.eval_expansions;
  b.max_seconds = c.eval_seconds;
  return b;
}

inline ScoringConfig scoring_config(const RunConfig& c, int iteration) {
  ScoringConfig s;
  s.n_candidates = c.n_candidates;
  s.n_attempt = c.n_attempt;
  s.subset_size = c.subset_size;
  s.budget = scoring_budget(c, iteration);
  s.c_puct = c.c_puct;
  return s;
}

inline PairingConfig pairing_config(const RunConfig& c) {
  PairingConfig p;
  p.threshold = c.threshold;
  p.allow_dual_role = c.allow_dual_role;
  p.same_provenance_only = c.same_provenance_only;
  p.max_pairs_per_state = c.max_pairs_per_state;
  return p;
}

// ---------------------------------------------------------------------------
// Run ledger: one JSON line per stage event, appended as the run progresses.
// Every artifact is recorded with its content digest; reruns with the same
// config must reproduce all of them byte for byte, so nothing wall-clock
// flavored is written here (recorded times use the node cost model).

inline void append_ledger(const std::filesystem::path& dir, const Json& row) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "run_ledger.jsonl", std::ios::binary | std::ios::app);
  if (!out) raise(Errc::IoError, "cannot append to run ledger");
  out << row.dump() << '\n';
}

inline Json artifact_entry(const std::filesystem::path& dir, const std::string& rel) {
  Json j;
  j["path"] = rel;
  j["digest"] = file_digest(dir / rel);
  return j;
}

// Checks that every artifact referenced by the ledger exists and still
// matches its recorded digest. Returns the number of artifacts checked.
inline int verify_ledger(const std::filesystem::path& dir) {
  int checked = 0;
  for (const Json& row : read_jsonl(dir / "run_ledger.jsonl")) {
    if (!row.contains("artifacts")) continue;
    for (const Json& a : row.at("artifacts")) {
      std::string rel = a.at("path").get<std::string>();
      std::string want = a.at("digest").get<std::string>();
      if (!std::filesystem::exists(dir / rel))
        raise(Errc::IoError, "ledger references missing file: " + rel);
      if (file_digest(dir / rel) != want)
        raise(Errc::IoError, "digest mismatch for " + rel);
      ++checked;
    }
  }
  return checked;
}

// ---------------------------------------------------------------------------
// Stage 1: corpus, split, curriculum, imitation-fit baseline policy.

struct Stage1Result {
  std::vector<ProofTree> train, eval;
  Curriculum curriculum;
  TacticPolicy p0;
};

namespace detail {

inline GenConfig gen_config(const RunConfig& c) {
  GenConfig g;
  g.n_theorems = c.n_theorems;
  g.max_depth = c.gen_max_depth;
  g.term_depth = c.term_depth;
  g.max_vars = c.max_vars;
  g.hyp_prob = c.hyp_prob;
  g.max_hyps = c.max_hyps;
  g.max_term_size = c.max_term_size;
  g.max_tries = c.max_tries;
  return g;
}

inline void write_loss_log(const std::filesystem::path& path, const FitStats& stats) {
  std::vector<Json> rows;
  for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e) {
    Json row;
    row["epoch"] = e;
    row["loss"] = stats.epoch_loss[e];
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

}  // namespace detail

inline Stage1Result stage1_prepare(const RunConfig& cfg) {
  validate_config(cfg);
  std::filesystem::path dir = cfg.out_dir;
  std::filesystem::create_directories(dir / "checkpoints");
  write_file(dir / "resolved.cfg", resolved_config_text(cfg));

  std::vector<ProofTree> corpus = generate_corpus(detail::gen_config(cfg), mix64(cfg.seed, 1));
  write_corpus(dir / "corpus.jsonl", corpus);
  CorpusSplit split = split_corpus(corpus, cfg.held_out_frac, mix64(cfg.seed, 2));
  write_corpus(dir / "corpus_train.jsonl", split.train);
  write_corpus(dir / "corpus_eval.jsonl", split.eval);

  std::vector<Triplet> triplets = corpus_triplets(split.train);
  write_triplets(dir / "curriculum.jsonl", triplets);

  Stage1Result out;
  out.p0 = make_policy(mix64(cfg.seed, 3), static_cast<std::uint32_t>(cfg.feature_dim),
                       cfg.temperature, "P0");
  FitStats sft = sft_fit(out.p0, triplets, SftConfig{cfg.sft_epochs, cfg.sft_lr});
  save_policy(dir / "checkpoints/P0.ckpt", out.p0);
  detail::write_loss_log(dir / "sft_log.jsonl", sft);

  Json row;
  row["stage"] = "stage1";
  row["metrics"] = Json{{"n_theorems", corpus.size()},
                        {"n_train", split.train.size()},
                        {"n_eval", split.eval.size()},
                        {"n_triplets", triplets.size()},
                        {"sft_initial_loss", sft.initial_loss},
                        {"sft_final_loss", sft.final_loss}};
  row["artifacts"] = Json::array({artifact_entry(dir, "resolved.cfg"),
                                  artifact_entry(dir, "corpus.jsonl"),
                                  artifact_entry(dir, "corpus_train.jsonl"),
                                  artifact_entry(dir, "corpus_eval.jsonl"),
                                  artifact_entry(dir, "curriculum.jsonl"),
                                  artifact_entry(dir, "checkpoints/P0.ckpt"),
                                  artifact_entry(dir, "sft_log.jsonl")});
  append_ledger(dir, row);

  out.train = std::move(split.train);
  out.eval = std::move(split.eval);
  out.curriculum = build_curriculum(std::move(triplets));
  return out;
}

// ---------------------------------------------------------------------------
// Stage 2: score one bucket (search on a subset, generator on the rest),
// then filter into preference pairs.

struct Stage2Result {
  ScoredCandidateSet sc_search;  // search-scored subset
  ScoredCandidateSet sc_all;     // full coverage of the bucket's states
  std::vector<PreferencePair> pairs;
  ScoreRegressor regressor;
};

inline Stage2Result stage2_generate(const RunConfig& cfg, const TacticPolicy& policy,
                                    const ScoreRegressor* warm_start,
                                    const std::vector<Triplet>& bucket, int iteration,
                                    const std::filesystem::path& dir, Json* ledger_row) {
  validate_config(cfg);
  ScoringConfig sconf = scoring_config(cfg, iteration);
  std::uint64_t seed = mix64(cfg.seed, 4, static_cast<std::uint64_t>(iteration));

  Stage2Result out;
  SubsetScores sub = fgps_subset(policy, bucket, sconf, seed);
  out.sc_search = sub.scored;

  out.regressor = warm_start != nullptr
                      ? *warm_start
                      : make_regressor(static_cast<std::uint32_t>(cfg.feature_dim));
  out.regressor.id = "G" + std::to_string(iteration);
  std::vector<ScoredExample> examples = scored_examples(out.sc_search);
  FitStats reg_stats = regressor_fit(out.regressor, examples, RegConfig{cfg.reg_epochs, cfg.reg_lr});

  ScoredCandidateSet sc_gen = generator_score_remainder(out.regressor, policy, sub.remainder,
                                                        sconf, mix64(seed, 7));
  out.sc_all = merge_scores(out.sc_search, std::move(sc_gen));
  out.pairs = filter_and_pair(out.sc_all, pairing_config(cfg));

  std::string iter_dir = "iter_" + std::to_string(iteration);
  write_scores(dir / iter_dir / "scores_search.jsonl", out.sc_search);
  write_scores(dir / iter_dir / "scores_all.jsonl", out.sc_all);
  write_pairs(dir / iter_dir / "pairs.jsonl", out.pairs);
  std::string reg_rel = "checkpoints/G" + std::to_string(iteration) + ".ckpt";
  save_regressor(dir / reg_rel, out.regressor);

  if (ledger_row != nullptr) {
    PairStats ps = pair_stats(out.pairs);
    (*ledger_row)["metrics"] =
        Json{{"bucket_states", distinct_states(bucket).size()},
             {"search_scored_states", out.sc_search.size()},
             {"generator_scored_states", sub.remainder.size()},
             {"scored_examples", examples.size()},
             {"regressor_final_loss", reg_stats.final_loss},
             {"n_pairs", ps.n_pairs},
             {"mean_margin", ps.mean_margin},
             {"scoring_simulations", sconf.budget.max_simulations}};
    (*ledger_row)["artifacts"] =
        Json::array({artifact_entry(dir, iter_dir + "/scores_search.jsonl"),
                     artifact_entry(dir, iter_dir + "/scores_all.jsonl"),
                     artifact_entry(dir, iter_dir + "/pairs.jsonl"),
                     artifact_entry(dir, reg_rel)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation: pass@k over held-out theorems with the deterministic best-first
// budget. Logged attempt times use the node cost model so reruns match.

inline PassAtKResult evaluate_policy(const RunConfig& cfg, const TacticPolicy& policy,
                                     const std::vector<ProofTree>& theorems, int iteration,
                                     const std::filesystem::path& dir, Json* ledger_row) {
  PassAtKResult res = pass_at_k(policy, theorems, cfg.eval_k, eval_budget(cfg),
                                mix64(cfg.seed, 5, static_cast<std::uint64_t>(iteration)),
                                cfg.eval_top_k);
  double virtual_seconds = 0.0;
  for (AttemptRecord& a : res.attempts) {
    a.elapsed = a.nodes * cfg.node_cost_seconds;
    virtual_seconds += a.elapsed;
  }
  std::string rel = "eval/attempts_iter_" + std::to_string(iteration) + ".jsonl";
  write_attempt_log(dir / rel, res.attempts);
  if (ledger_row != nullptr) {
    (*ledger_row)["metrics"] = Json{{"pass_rate", res.pass_rate},
                                    {"k", cfg.eval_k},
                                    {"n_theorems", res.n_theorems},
                                    {"n_proved", res.n_proved},
                                    {"virtual_seconds", virtual_seconds}};
    (*ledger_row)["artifacts"] = Json::array({artifact_entry(dir, rel)});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Stage 3: the full curriculum loop. For n = 1..I take bucket n, score it
// with P_{n-1}, pair, preference-tune with reference P_{n-1}, evaluate.

struct Stage3Result {
  TacticPolicy final_policy;
  std::vector<double> pass_curve;  // held-out pass@k for P_0 .. P_I
};

inline Stage3Result stage3_iterate(const RunConfig& cfg) {
  validate_config(cfg);
  std::filesystem::path dir = cfg.out_dir;
  Stage1Result s1 = stage1_prepare(cfg);

  Stage3Result out;
  Json eval0;
  eval0["stage"] = "eval";
  eval0["iteration"] = 0;
  PassAtKResult base = evaluate_policy(cfg, s1.p0, s1.eval, 0, dir, &eval0);
  append_ledger(dir, eval0);
  out.pass_curve.push_back(base.pass_rate);

  TacticPolicy prev = std::move(s1.p0);
  std::optional<ScoreRegressor> reg;
  for (int n = 1; n <= cfg.iterations; ++n) {
    Json row;
    row["stage"] = "iterate";
    row["iteration"] = n;
    row["bucket"] = n;

    auto bucket_it = s1.curriculum.buckets.find(n);
    bool have_bucket = bucket_it != s1.curriculum.buckets.end() &&
                       static_cast<int>(bucket_it->second.size()) >= cfg.min_bucket;
    TacticPolicy theta = prev;
    theta.id = "P" + std::to_string(n);
    if (!have_bucket) {
      row["note"] = "bucket missing or below min size; policy carried forward";
    } else {
      Stage2Result s2 = stage2_generate(cfg, prev, reg ? &*reg : nullptr, bucket_it->second, n,
                                        dir, &row);
      reg = std::move(s2.regressor);
      if (s2.pairs.empty()) {
        row["note"] = "no pairs above threshold; policy carried forward";
      } else {
        FitStats dpo = dpo_fit(theta, prev, s2.pairs, DpoConfig{cfg.beta, cfg.dpo_lr, cfg.dpo_epochs});
        detail::write_loss_log(dir / ("iter_" + std::to_string(n)) / "dpo_log.jsonl", dpo);
        row["metrics"]["dpo_initial_loss"] = dpo.initial_loss;
        row["metrics"]["dpo_final_loss"] = dpo.final_loss;
        row["artifacts"].push_back(
            artifact_entry(dir, "iter_" + std::to_string(n) + "/dpo_log.jsonl"));
      }
    }
    std::string ckpt_rel = "checkpoints/P" + std::to_string(n) + ".ckpt";
    save_policy(dir / ckpt_rel, theta);
    if (!row.contains("artifacts")) row["artifacts"] = Json::array();
    row["artifacts"].push_back(artifact_entry(dir, ckpt_rel));
    append_ledger(dir, row);

    Json eval_row;
    eval_row["stage"] = "eval";
    eval_row["iteration"] = n;
    PassAtKResult res = evaluate_policy(cfg, theta, s1.eval, n, dir, &eval_row);
    append_ledger(dir, eval_row);
    out.pass_curve.push_back(res.pass_rate);

    prev = std::move(theta);
    if (cfg.early_stop && out.pass_curve.size() >= 2 &&
        res.pass_rate <= out.pass_curve[out.pass_curve.size() - 2]) {
      Json stop;
      stop["stage"] = "early_stop";
      stop["iteration"] = n;
      append_ledger(dir, stop);
      break;
    }
  }
  out.final_policy = std::move(prev);
  return out;
}

// ---------------------------------------------------------------------------
// Reporting: verify the ledger, recompute pass rates from the raw attempt
// logs, cross-check them against the recorded metrics, and emit a summary
// table plus a plottable curve file.

struct RunReport {
  std::vector<double> pass_curve;
  int artifacts_checked = 0;
  std::string table;  // contents of report.txt
};

inline RunReport evaluate_and_report(const std::filesystem::path& dir) {
  RunReport rep;
  rep.artifacts_checked = verify_ledger(dir);

  std::map<int, double> recorded, recomputed;
  std::map<int, Json> iter_rows;
  for (const Json& row : read_jsonl(dir / "run_ledger.jsonl")) {
    std::string stage = row.at("stage").get<std::string>();
    if (stage == "eval") {
      int it = row.at("iteration").get<int>();
      recorded[it] = row.at("metrics").at("pass_rate").get<double>();
      std::vector<AttemptRecord> attempts =
          read_attempt_log(dir / ("eval/attempts_iter_" + std::to_string(it) + ".jsonl"));
      recomputed[it] = pass_rate_from_log(attempts);
    } else if (stage == "iterate") {
      iter_rows[row.at("iteration").get<int>()] = row;
    }
  }
  for (const auto& [it, rate] : recorded) {
    if (std::abs(rate - recomputed.at(it)) > 1e-12)
      raise(Errc::IoError, "recorded pass rate disagrees with attempt log, iteration " +
                               std::to_string(it));
    rep.pass_curve.push_back(rate);
  }

  std::string curve = "iteration\tpass_rate\n";
  std::string table = "iter  bucket  pairs  pass_rate\n";
  char buf[128];
  for (const auto& [it, rate] : recorded) {
    std::snprintf(buf, sizeof buf, "%d\t%.6f\n", it, rate);
    curve += buf;
    int n_pairs = 0;
    std::string bucket = "-";
    auto ir = iter_rows.find(it);
    if (ir != iter_rows.end()) {
      bucket = std::to_string(ir->second.at("bucket").get<int>());
      if (ir->second.contains("metrics") && ir->second.at("metrics").contains("n_pairs"))
        n_pairs = ir->second.at("metrics").at("n_pairs").get<int>();
    }
    std::snprintf(buf, sizeof buf, "%-4d  %-6s  %-5d  %.6f\n", it, bucket.c_str(), n_pairs, rate);
    table += buf;
  }
  write_file(dir / "curve.tsv", curve);
  write_file(dir / "report.txt", table);
  rep.table = table;
  return rep;
}

}  // namespace prooftrain
