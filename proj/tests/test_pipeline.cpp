#include "prooftrain/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>

using namespace prooftrain;
namespace fs = std::filesystem;

namespace {

RunConfig mini_config(const std::string& dir, std::uint64_t seed = 11) {
  RunConfig c;
  c.n_theorems = 60;
  c.held_out_frac = 0.2;
  c.gen_max_depth = 4;
  c.feature_dim = 128;
  c.sft_epochs = 10;
  c.n_candidates = 4;
  c.n_attempt = 4;
  c.subset_size = 5;
  c.mcts_simulations = 16;
  c.mcts_depth = 6;
  c.reg_epochs = 30;
  c.threshold = 0.5;
  c.dpo_epochs = 4;
  c.iterations = 2;
  c.eval_k = 2;
  c.eval_expansions = 12;
  c.eval_depth = 6;
  c.seed = seed;
  c.out_dir = dir;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::map<std::string, std::string> digest_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).generic_string()] = file_digest(entry.path());
  }
  return out;
}

}  // namespace

TEST(Pipeline, MiniRunProducesTheWholeArtifactSet) {
  TempDir dir("pt_mini_run");
  RunConfig cfg = mini_config(dir.str());
  Stage3Result res = stage3_iterate(cfg);
  EXPECT_EQ(res.pass_curve.size(), 3u);  // P0 plus two iterations
  EXPECT_EQ(res.final_policy.id, "P2");

  for (const char* rel :
       {"resolved.cfg", "corpus.jsonl", "corpus_train.jsonl", "corpus_eval.jsonl",
        "curriculum.jsonl", "sft_log.jsonl", "run_ledger.jsonl", "checkpoints/P0.ckpt",
        "checkpoints/P1.ckpt", "checkpoints/P2.ckpt", "eval/attempts_iter_0.jsonl",
        "eval/attempts_iter_1.jsonl", "eval/attempts_iter_2.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir.path / rel)) << rel;
  }

  // curriculum has every bucket up to the depth bound and P0 exists before any
  // iteration row appears in the ledger
  Curriculum cur = build_curriculum(corpus_triplets(read_corpus(dir.path / "corpus_train.jsonl")));
  for (int d = 1; d <= cfg.gen_max_depth; ++d) EXPECT_TRUE(cur.buckets.count(d)) << d;

  RunReport rep = evaluate_and_report(dir.path);
  EXPECT_GT(rep.artifacts_checked, 10);
  ASSERT_EQ(rep.pass_curve.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(rep.pass_curve[i], res.pass_curve[i]);
  EXPECT_TRUE(fs::exists(dir.path / "curve.tsv"));
  EXPECT_TRUE(fs::exists(dir.path / "report.txt"));
  EXPECT_NE(rep.table.find("pass_rate"), std::string::npos);
}

TEST(Pipeline, LedgerRowsFollowTheCurriculumOrder) {
  TempDir dir("pt_ledger_order");
  stage3_iterate(mini_config(dir.str()));
  std::vector<int> iterate_buckets;
  std::vector<int> eval_iters;
  for (const Json& row : read_jsonl(dir.path / "run_ledger.jsonl")) {
    std::string stage = row.at("stage").get<std::string>();
    if (stage == "iterate") {
      EXPECT_EQ(row.at("bucket").get<int>(), row.at("iteration").get<int>());
      iterate_buckets.push_back(row.at("bucket").get<int>());
    } else if (stage == "eval") {
      eval_iters.push_back(row.at("iteration").get<int>());
    }
  }
  EXPECT_EQ(iterate_buckets, (std::vector<int>{1, 2}));
  EXPECT_EQ(eval_iters, (std::vector<int>{0, 1, 2}));
}

TEST(Pipeline, RerunsAreByteIdentical) {
  TempDir tmp("pt_det");
  fs::path run = tmp.path / "run";
  RunConfig cfg = mini_config(run.string(), 77);

  stage3_iterate(cfg);
  evaluate_and_report(run);
  auto da = digest_tree(run);

  fs::remove_all(run);
  stage3_iterate(cfg);
  evaluate_and_report(run);
  auto db = digest_tree(run);

  ASSERT_EQ(da.size(), db.size());
  for (const auto& [rel, dig] : da) {
    ASSERT_TRUE(db.count(rel)) << rel;
    EXPECT_EQ(db.at(rel), dig) << rel;
  }
}

TEST(Pipeline, ResolvedConfigRoundTrips) {
  TempDir dir("pt_cfg_roundtrip");
  RunConfig cfg = mini_config(dir.str(), 123);
  cfg.hyp_prob = 0.17;
  cfg.budget_growth = 1.25;
  cfg.early_stop = true;
  fs::path path = dir.path / "t.cfg";
  write_file(path, resolved_config_text(cfg));
  RunConfig back = parse_config_file(path);
  EXPECT_EQ(resolved_config_text(back), resolved_config_text(cfg));
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.out_dir, cfg.out_dir);
  EXPECT_TRUE(back.early_stop);

  write_file(path, "# comment line\n\nn_theorems = 12\n  threshold=0.75  \n");
  RunConfig sparse = parse_config_file(path);
  EXPECT_EQ(sparse.n_theorems, 12);
  EXPECT_DOUBLE_EQ(sparse.threshold, 0.75);
  EXPECT_EQ(sparse.gen_max_depth, RunConfig{}.gen_max_depth);

  write_file(path, "no_such_key = 5\n");
  EXPECT_THROW(parse_config_file(path), Error);
  write_file(path, "n_theorems = twelve\n");
  EXPECT_THROW(parse_config_file(path), Error);
  write_file(path, "just a line\n");
  EXPECT_THROW(parse_config_file(path), Error);
}

TEST(Pipeline, ConfigValidation) {
  RunConfig c = mini_config("x");
  c.threshold = 0.0;
  EXPECT_THROW(validate_config(c), Error);
  c = mini_config("x");
  c.held_out_frac = 1.0;
  EXPECT_THROW(validate_config(c), Error);
  c = mini_config("x");
  c.n_theorems = 0;
  EXPECT_THROW(validate_config(c), Error);
  c = mini_config("x");
  c.out_dir.clear();
  EXPECT_THROW(validate_config(c), Error);
  c = mini_config("x");
  c.beta = -0.5;
  EXPECT_THROW(validate_config(c), Error);
}

TEST(Pipeline, ScoringBudgetGrowsPerIteration) {
  RunConfig c = mini_config("x");
  c.mcts_simulations = 64;
  c.budget_growth = 1.5;
  EXPECT_EQ(scoring_budget(c, 1).max_simulations, 64);
  EXPECT_EQ(scoring_budget(c, 2).max_simulations, 96);
  EXPECT_EQ(scoring_budget(c, 3).max_simulations, 144);
  EXPECT_EQ(scoring_budget(c, 4).max_simulations, 216);
}

TEST(Pipeline, TamperedArtifactsFailVerification) {
  TempDir dir("pt_tamper");
  stage3_iterate(mini_config(dir.str()));
  EXPECT_GT(verify_ledger(dir.path), 0);
  std::string victim = (dir.path / "eval/attempts_iter_1.jsonl").string();
  std::string text = read_file(victim);
  write_file(victim, text + "\n");
  EXPECT_THROW(verify_ledger(dir.path), Error);
  EXPECT_THROW(evaluate_and_report(dir.path), Error);
}

TEST(Pipeline, ImpossibleThresholdCarriesPolicyForward) {
  // margins can never exceed 1.0, so every iteration keeps the previous policy
  TempDir dir("pt_carry");
  RunConfig cfg = mini_config(dir.str());
  cfg.threshold = 1.0;
  Stage3Result res = stage3_iterate(cfg);

  TacticPolicy p0 = load_policy(dir.path / "checkpoints/P0.ckpt");
  TacticPolicy p2 = load_policy(dir.path / "checkpoints/P2.ckpt");
  EXPECT_EQ(p0.w, p2.w);
  EXPECT_DOUBLE_EQ(res.pass_curve[0], res.pass_curve[1]);
  EXPECT_DOUBLE_EQ(res.pass_curve[0], res.pass_curve[2]);

  bool noted = false;
  for (const Json& row : read_jsonl(dir.path / "run_ledger.jsonl"))
    if (row.contains("note")) noted = true;
  EXPECT_TRUE(noted);
}

TEST(Pipeline, EarlyStopHaltsOnPlateau) {
  TempDir dir("pt_early_stop");
  RunConfig cfg = mini_config(dir.str());
  cfg.threshold = 1.0;  // guarantees a plateau
  cfg.iterations = 3;
  cfg.early_stop = true;
  Stage3Result res = stage3_iterate(cfg);
  EXPECT_EQ(res.pass_curve.size(), 2u);  // stopped after the first iteration

  bool stopped = false;
  for (const Json& row : read_jsonl(dir.path / "run_ledger.jsonl"))
    if (row.at("stage").get<std::string>() == "early_stop") stopped = true;
  EXPECT_TRUE(stopped);
  EXPECT_FALSE(fs::exists(dir.path / "checkpoints/P2.ckpt"));
}

TEST(Pipeline, MissingBucketIsSkippedWithANote) {
  TempDir dir("pt_skip_bucket");
  RunConfig cfg = mini_config(dir.str());
  cfg.min_bucket = 1000000;  // no bucket is ever this large
  cfg.iterations = 1;
  Stage3Result res = stage3_iterate(cfg);
  EXPECT_EQ(res.pass_curve.size(), 2u);

  bool noted = false;
  for (const Json& row : read_jsonl(dir.path / "run_ledger.jsonl")) {
    if (row.at("stage").get<std::string>() == "iterate")
      noted = row.contains("note") &&
              row.at("note").get<std::string>().find("carried forward") != std::string::npos;
  }
  EXPECT_TRUE(noted);
  TacticPolicy p0 = load_policy(dir.path / "checkpoints/P0.ckpt");
  TacticPolicy p1 = load_policy(dir.path / "checkpoints/P1.ckpt");
  EXPECT_EQ(p0.w, p1.w);
}

#ifdef CLI_BIN

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(CLI_BIN) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Pipeline, CliRunsTheLoopAndReports) {
  TempDir dir("pt_cli_smoke");
  RunConfig cfg = mini_config(dir.str());
  cfg.iterations = 1;
  fs::path cfg_path = dir.path / "mini.cfg";
  write_file(cfg_path, resolved_config_text(cfg));

  EXPECT_EQ(run_cli("iterate --config " + cfg_path.string()), 0);
  EXPECT_TRUE(fs::exists(dir.path / "checkpoints/P1.ckpt"));
  EXPECT_TRUE(fs::exists(dir.path / "report.txt"));
  EXPECT_EQ(run_cli("report --config " + cfg_path.string()), 0);
  EXPECT_EQ(run_cli("eval --config " + cfg_path.string() + " --policy " +
                    (dir.path / "checkpoints/P1.ckpt").string()),
            0);
  EXPECT_TRUE(fs::exists(dir.path / "eval/attempts_cli.jsonl"));
}

TEST(Pipeline, CliExitCodesDistinguishFailureKinds) {
  TempDir dir("pt_cli_codes");
  // config validation failure
  EXPECT_EQ(run_cli("gen-corpus --n_theorems 0 --out_dir " + dir.str()), 1);
  // unknown flag: argument parse failure
  EXPECT_EQ(run_cli("gen-corpus --definitely-not-a-flag 1"), 1);
  // missing input file: runtime failure
  EXPECT_EQ(run_cli("report --out_dir " + dir.str() + "/nowhere"), 2);
  // missing required option
  EXPECT_NE(run_cli("score --out_dir " + dir.str()), 0);
}

#endif  // CLI_BIN
