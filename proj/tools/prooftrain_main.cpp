// Command-line front end: each subcommand wraps one pipeline operation and
// reads/writes the line-delimited dataset files. Exit codes: 0 success,
// 1 validation error (bad config, bad input), 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prooftrain/pipeline.hpp"

namespace pt = prooftrain;

namespace {

struct ConfigArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Every RunConfig field becomes a --flag mirroring its name.
void add_config_options(CLI::App* cmd, std::shared_ptr<ConfigArgs> args) {
  cmd->add_option("--config", args->config_path, "key = value config file");
  for (const auto& field : pt::detail::config_fields()) {
    std::string name = field.name;
    cmd->add_option_function<std::string>(
        "--" + name, [args, name](const std::string& v) { args->overrides.emplace_back(name, v); },
        "override config field " + name);
  }
}

pt::RunConfig build_config(const ConfigArgs& args) {
  pt::RunConfig cfg;
  if (!args.config_path.empty()) cfg = pt::parse_config_file(args.config_path);
  for (const auto& [k, v] : args.overrides) pt::set_config_field(cfg, k, v);
  pt::validate_config(cfg);
  return cfg;
}

struct StageTimer {
  const char* name;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ~StageTimer() {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%s] %.2fs wall\n", name, secs);
  }
};

std::vector<pt::Triplet> load_bucket(const std::filesystem::path& path, int bucket) {
  std::vector<pt::Triplet> all = pt::read_triplets(path);
  std::vector<pt::Triplet> out;
  for (pt::Triplet& t : all)
    if (t.difficulty == bucket) out.push_back(std::move(t));
  if (out.empty())
    pt::raise(pt::Errc::EmptyBucket, "no triplets with difficulty " + std::to_string(bucket));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equational prover training pipeline"};
  app.require_subcommand(1);

  auto gen_args = std::make_shared<ConfigArgs>();
  CLI::App* gen = app.add_subcommand("gen-corpus", "generate a theorem corpus");
  add_config_options(gen, gen_args);

  auto cur_args = std::make_shared<ConfigArgs>();
  CLI::App* cur = app.add_subcommand("curriculum", "label a corpus and write triplets");
  add_config_options(cur, cur_args);
  std::string cur_corpus;
  cur->add_option("--corpus", cur_corpus, "corpus file (default <out_dir>/corpus_train.jsonl)");

  auto sft_args = std::make_shared<ConfigArgs>();
  CLI::App* sft = app.add_subcommand("sft", "fit the baseline policy on recorded tactics");
  add_config_options(sft, sft_args);

  auto score_args = std::make_shared<ConfigArgs>();
  CLI::App* score = app.add_subcommand("score", "score one curriculum bucket");
  add_config_options(score, score_args);
  int score_bucket = 1;
  std::string score_policy;
  std::string score_warm;
  score->add_option("--bucket", score_bucket, "difficulty bucket to score")->required();
  score->add_option("--policy", score_policy, "policy checkpoint (default <out_dir>/checkpoints/P0.ckpt)");
  score->add_option("--warm-start", score_warm, "regressor checkpoint to warm start from");

  auto pair_args = std::make_shared<ConfigArgs>();
  CLI::App* pair = app.add_subcommand("pair", "filter scores into preference pairs");
  add_config_options(pair, pair_args);
  std::string pair_scores;
  std::string pair_out;
  pair->add_option("--scores", pair_scores, "scored candidate file")->required();
  pair->add_option("--out", pair_out, "output pairs file")->required();

  auto dpo_args = std::make_shared<ConfigArgs>();
  CLI::App* dpo = app.add_subcommand("dpo", "preference-tune a policy against a reference");
  add_config_options(dpo, dpo_args);
  std::string dpo_pairs, dpo_ref, dpo_out;
  dpo->add_option("--pairs", dpo_pairs, "preference pairs file")->required();
  dpo->add_option("--ref", dpo_ref, "reference policy checkpoint")->required();
  dpo->add_option("--out", dpo_out, "output checkpoint")->required();

  auto iter_args = std::make_shared<ConfigArgs>();
  CLI::App* iter = app.add_subcommand("iterate", "run the full curriculum loop");
  add_config_options(iter, iter_args);

  auto eval_args = std::make_shared<ConfigArgs>();
  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy checkpoint");
  add_config_options(eval, eval_args);
  std::string eval_policy, eval_corpus, eval_out;
  eval->add_option("--policy", eval_policy, "policy checkpoint")->required();
  eval->add_option("--corpus", eval_corpus, "theorems to evaluate (default <out_dir>/corpus_eval.jsonl)");
  eval->add_option("--out", eval_out, "attempt log output (default <out_dir>/eval/attempts_cli.jsonl)");

  auto rep_args = std::make_shared<ConfigArgs>();
  CLI::App* rep = app.add_subcommand("report", "verify the ledger and write the report");
  add_config_options(rep, rep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      StageTimer timer{"gen-corpus"};
      pt::RunConfig cfg = build_config(*gen_args);
      auto corpus = pt::generate_corpus(pt::detail::gen_config(cfg), pt::mix64(cfg.seed, 1));
      std::filesystem::path dir = cfg.out_dir;
      pt::write_corpus(dir / "corpus.jsonl", corpus);
      pt::CorpusSplit split = pt::split_corpus(corpus, cfg.held_out_frac, pt::mix64(cfg.seed, 2));
      pt::write_corpus(dir / "corpus_train.jsonl", split.train);
      pt::write_corpus(dir / "corpus_eval.jsonl", split.eval);
      std::printf("wrote %zu theorems (%zu train, %zu eval) to %s\n", corpus.size(),
                  split.train.size(), split.eval.size(), (dir / "corpus.jsonl").string().c_str());
    } else if (cur->parsed()) {
      StageTimer timer{"curriculum"};
      pt::RunConfig cfg = build_config(*cur_args);
      std::filesystem::path dir = cfg.out_dir;
      std::filesystem::path src =
          cur_corpus.empty() ? dir / "corpus_train.jsonl" : std::filesystem::path(cur_corpus);
      if (cur_corpus.empty() && !std::filesystem::exists(src)) src = dir / "corpus.jsonl";
      auto trees = pt::read_corpus(src);
      for (const pt::ProofTree& t : trees) pt::replay_tree(t);
      auto triplets = pt::corpus_triplets(trees);
      pt::write_triplets(dir / "curriculum.jsonl", triplets);
      pt::Curriculum c = pt::build_curriculum(triplets);
      std::printf("wrote %zu triplets; buckets:", triplets.size());
      for (const auto& [n, b] : c.buckets) std::printf(" %d:%zu", n, b.size());
      std::printf("\n");
    } else if (sft->parsed()) {
      StageTimer timer{"sft"};
      pt::RunConfig cfg = build_config(*sft_args);
      std::filesystem::path dir = cfg.out_dir;
      auto triplets = pt::read_triplets(dir / "curriculum.jsonl");
      pt::TacticPolicy p = pt::make_policy(pt::mix64(cfg.seed, 3),
                                           static_cast<std::uint32_t>(cfg.feature_dim),
                                           cfg.temperature, "P0");
      pt::FitStats stats = pt::sft_fit(p, triplets, pt::SftConfig{cfg.sft_epochs, cfg.sft_lr});
      pt::save_policy(dir / "checkpoints/P0.ckpt", p);
      pt::detail::write_loss_log(dir / "sft_log.jsonl", stats);
      std::printf("loss %.6f -> %.6f, checkpoint %s\n", stats.initial_loss, stats.final_loss,
                  (dir / "checkpoints/P0.ckpt").string().c_str());
    } else if (score->parsed()) {
      StageTimer timer{"score"};
      pt::RunConfig cfg = build_config(*score_args);
      std::filesystem::path dir = cfg.out_dir;
      std::filesystem::path ppath =
          score_policy.empty() ? dir / "checkpoints/P0.ckpt" : std::filesystem::path(score_policy);
      pt::TacticPolicy policy = pt::load_policy(ppath);
      auto bucket = load_bucket(dir / "curriculum.jsonl", score_bucket);
      std::optional<pt::ScoreRegressor> warm;
      if (!score_warm.empty()) warm = pt::load_regressor(score_warm);
      pt::Stage2Result res = pt::stage2_generate(cfg, policy, warm ? &*warm : nullptr, bucket,
                                                 score_bucket, dir, nullptr);
      pt::PairStats ps = pt::pair_stats(res.pairs);
      std::printf("scored %zu states (search %zu), %d pairs\n", res.sc_all.size(),
                  res.sc_search.size(), ps.n_pairs);
    } else if (pair->parsed()) {
      StageTimer timer{"pair"};
      pt::RunConfig cfg = build_config(*pair_args);
      pt::ScoredCandidateSet sc = pt::read_scores(pair_scores);
      auto pairs = pt::filter_and_pair(sc, pt::pairing_config(cfg));
      pt::write_pairs(pair_out, pairs);
      pt::PairStats ps = pt::pair_stats(pairs);
      std::printf("%d pairs from %d states (mean margin %.4f)\n", ps.n_pairs, ps.n_states,
                  ps.mean_margin);
    } else if (dpo->parsed()) {
      StageTimer timer{"dpo"};
      pt::RunConfig cfg = build_config(*dpo_args);
      auto pairs = pt::read_pairs(dpo_pairs);
      pt::TacticPolicy ref = pt::load_policy(dpo_ref);
      pt::TacticPolicy theta = ref;
      pt::FitStats stats =
          pt::dpo_fit(theta, ref, pairs, pt::DpoConfig{cfg.beta, cfg.dpo_lr, cfg.dpo_epochs});
      pt::save_policy(dpo_out, theta);
      std::printf("loss %.6f -> %.6f, checkpoint %s\n", stats.initial_loss, stats.final_loss,
                  dpo_out.c_str());
    } else if (iter->parsed()) {
      StageTimer timer{"iterate"};
      pt::RunConfig cfg = build_config(*iter_args);
      pt::Stage3Result res = pt::stage3_iterate(cfg);
      pt::RunReport report = pt::evaluate_and_report(cfg.out_dir);
      std::printf("%s", report.table.c_str());
    } else if (eval->parsed()) {
      StageTimer timer{"eval"};
      pt::RunConfig cfg = build_config(*eval_args);
      std::filesystem::path dir = cfg.out_dir;
      pt::TacticPolicy policy = pt::load_policy(eval_policy);
      std::filesystem::path corpus_path =
          eval_corpus.empty() ? dir / "corpus_eval.jsonl" : std::filesystem::path(eval_corpus);
      auto theorems = pt::read_corpus(corpus_path);
      pt::PassAtKResult res = pt::pass_at_k(policy, theorems, cfg.eval_k, pt::eval_budget(cfg),
                                            pt::mix64(cfg.seed, 5, 0), cfg.eval_top_k);
      for (pt::AttemptRecord& a : res.attempts) a.elapsed = a.nodes * cfg.node_cost_seconds;
      std::filesystem::path out =
          eval_out.empty() ? dir / "eval/attempts_cli.jsonl" : std::filesystem::path(eval_out);
      pt::write_attempt_log(out, res.attempts);
      std::printf("pass@%d = %.6f (%d/%d)\n", cfg.eval_k, res.pass_rate, res.n_proved,
                  res.n_theorems);
    } else if (rep->parsed()) {
      StageTimer timer{"report"};
      pt::RunConfig cfg = build_config(*rep_args);
      pt::RunReport report = pt::evaluate_and_report(cfg.out_dir);
      std::printf("%d artifacts verified\n%s", report.artifacts_checked, report.table.c_str());
    }
  } catch (const pt::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", pt::errc_name(e.code()), e.what());
    switch (e.code()) {
      case pt::Errc::InvalidConfig:
      case pt::Errc::InvalidThreshold:
      case pt::Errc::ParseError:
        return 1;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
