// causalkit: mine cause-effect pairs, build co-occurrence statistics and
// causal embeddings, construct labeled datasets, and run the three-stage
// encoder pipeline (pretrain-lm -> inject -> finetune) with evaluation
// harnesses. One subcommand per pipeline phase; every artifact embeds the
// effective config so reruns are reproducible byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "causalkit/causalnet.hpp"
#include "causalkit/checkpoint.hpp"
#include "causalkit/config.hpp"
#include "causalkit/corpus.hpp"
#include "causalkit/dataset.hpp"
#include "causalkit/embed.hpp"
#include "causalkit/encoder.hpp"
#include "causalkit/eval.hpp"
#include "causalkit/miner.hpp"
#include "causalkit/pairs.hpp"
#include "causalkit/train.hpp"
#include "causalkit/types.hpp"
#include "causalkit/version.hpp"

namespace ck = causalkit;
using Params = ck::EncoderParams<double>;

namespace {

struct Cli {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  mutable std::string log_format = "text";

  ck::RunConfig run_config() const {
    ck::RunConfig config = ck::load_config(config_path, overrides);
    if (config.threads <= 0) {
      config.threads = static_cast<int>(std::thread::hardware_concurrency());
      if (config.threads <= 0) config.threads = 1;
    }
    log_format = config.log_format;
    return config;
  }

  void info(const std::string& msg) const {
    if (log_format == "jsonl") {
      nlohmann::ordered_json j;
      j["level"] = "info";
      j["msg"] = msg;
      std::cerr << j.dump() << '\n';
    } else {
      std::cerr << "causalkit: " << msg << '\n';
    }
  }
};

// Registers a flag that, when set, feeds the shared key=value override map;
// RunConfig::apply does the typed validation.
void add_config_flag(CLI::App* cmd, Cli& cli, const std::string& flag,
                     const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
         flag,
         [&cli, key](const std::string& value) { cli.overrides[key] = value; },
         help)
      ->expected(1);
}

void add_common_flags(CLI::App* cmd, Cli& cli) {
  cmd->add_option("--config", cli.config_path, "key = value config file");
  add_config_flag(cmd, cli, "--seed", "seed", "master random seed");
  add_config_flag(cmd, cli, "--threads", "threads", "worker threads (results are thread-count invariant)");
  add_config_flag(cmd, cli, "--log", "log", "diagnostics format: text|jsonl");
}

ck::Vocab load_vocab_checked(const std::string& path) { return ck::Vocab::load(path); }

Params load_params_checked(const std::string& ckpt_path, const ck::Vocab& vocab) {
  std::uint64_t vocab_hash = 0;
  Params params = ck::load_checkpoint<double>(ckpt_path, &vocab_hash);
  if (vocab_hash != vocab.hash()) {
    throw ck::DataError("vocab hash mismatch between " + ckpt_path +
                        " and the supplied vocab file");
  }
  return params;
}

// Run-level training fields come from the run config; architecture fields
// stay pinned to the loaded checkpoint.
ck::TrainConfig merge_train_config(const Params& params, const ck::RunConfig& run) {
  ck::TrainConfig c = params.config;
  c.objective = run.train.objective;
  c.margin = run.train.margin;
  c.lambda_wd = run.train.lambda_wd;
  c.lambda_anchor = run.train.lambda_anchor;
  c.learning_rate = run.train.learning_rate;
  c.batch_size = run.train.batch_size;
  c.epochs = run.train.epochs;
  c.eval_every = run.train.eval_every;
  c.mask_rate = run.train.mask_rate;
  c.seed = run.train.seed;
  return c;
}

int run_mine(const Cli& cli, const std::string& mode, const std::string& input,
             const std::string& out, const std::string& patterns_path,
             const std::string& stopwords_path) {
  const ck::RunConfig config = cli.run_config();
  ck::MinerConfig miner = config.miner_config();
  if (!stopwords_path.empty()) miner.stopwords = ck::load_stopwords(stopwords_path);
  const auto patterns = patterns_path.empty() ? ck::default_patterns()
                                              : ck::load_patterns(patterns_path);
  const ck::MineMode mine_mode =
      mode == "word" ? ck::MineMode::word : ck::MineMode::sentence;

  std::vector<ck::CausalPair> pairs;
  const auto summary =
      ck::mine_corpus(input, mine_mode, pairs, miner, patterns, config.threads);
  ck::save_pairs(out, pairs, config.meta_line());
  cli.info("mined " + std::to_string(summary.occurrences) + " occurrences into " +
           std::to_string(summary.distinct_pairs) + " distinct pairs from " +
           std::to_string(summary.documents) + " documents");
  return 0;
}

int run_net(const Cli& cli, const std::string& pairs_path, const std::string& out,
            long long top_n, const std::string& scored_out) {
  const ck::RunConfig config = cli.run_config();
  const auto pairs = ck::load_pairs(pairs_path);
  ck::CausalNetwork net;
  net.accumulate(pairs);
  if (net.skipped_non_word() > 0) {
    cli.info("skipped " + std::to_string(net.skipped_non_word()) +
             " non-word-level pairs");
  }
  net.save(out, config.alpha, config.meta_comment());
  cli.info("network over " + std::to_string(net.n_pairs()) + " pair observations");
  if (top_n > 0) {
    if (scored_out.empty()) {
      throw ck::ConfigError("--top requires --scored-out");
    }
    const auto scored = net.top_n(static_cast<std::size_t>(top_n),
                                  config.strength_config());
    ck::save_pairs(scored_out, scored, config.meta_line());
    cli.info("exported top " + std::to_string(scored.size()) + " scored pairs");
  }
  return 0;
}

int run_embed(const Cli& cli, const std::string& pairs_path,
              const std::string& out_cause, const std::string& out_effect,
              const std::string& harvest_out) {
  const ck::RunConfig config = cli.run_config();
  const auto pairs = ck::load_pairs(pairs_path);
  const auto emb = ck::train_embeddings<double>(pairs, config.embed_config());
  ck::save_embeddings(emb, out_cause, out_effect, config.meta_comment());
  cli.info("trained " + std::to_string(emb.cause_words.size()) + " cause and " +
           std::to_string(emb.effect_words.size()) + " effect vectors");
  if (!harvest_out.empty()) {
    const auto harvested = ck::harvest(emb, config.harvest_threshold,
                                       config.embed_topk, config.threads);
    ck::save_pairs(harvest_out, harvested, config.meta_line());
    cli.info("harvested " + std::to_string(harvested.size()) + " pairs above " +
             ck::format_double(config.harvest_threshold));
  }
  return 0;
}

int run_build_dataset(const Cli& cli, const std::vector<std::string>& pair_files,
                      const std::string& conceptnet_csv,
                      const std::string& causalbank_tsv, const std::string& out_dir) {
  const ck::RunConfig config = cli.run_config();
  std::vector<ck::CausalPair> positives;
  for (const auto& f : pair_files) {
    for (auto& p : ck::load_pairs(f)) {
      if (p.label == 1) positives.push_back(std::move(p));
    }
  }
  if (!conceptnet_csv.empty()) {
    for (auto& p : ck::load_conceptnet_csv(conceptnet_csv)) positives.push_back(std::move(p));
  }
  if (!causalbank_tsv.empty()) {
    for (auto& p : ck::load_causalbank_tsv(causalbank_tsv)) positives.push_back(std::move(p));
  }
  if (positives.empty()) {
    throw ck::DataError("no positive pairs supplied (use --pairs/--conceptnet/--causalbank)");
  }

  ck::SampleStats stats;
  auto examples = ck::negative_sample(positives, config.sampler_config(), &stats);
  ck::class_weights(examples, config.weighting);
  const auto splits =
      ck::split(examples, {config.split_train, config.split_dev, config.split_test},
                config.seed);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string meta = config.meta_line();
  ck::save_examples((fs::path(out_dir) / "train.jsonl").string(), splits.train, meta);
  ck::save_examples((fs::path(out_dir) / "dev.jsonl").string(), splits.dev, meta);
  ck::save_examples((fs::path(out_dir) / "test.jsonl").string(), splits.test, meta);
  cli.info("sampled " + std::to_string(stats.positives) + " positives, " +
           std::to_string(stats.negatives) + " negatives (" +
           std::to_string(stats.skipped) + " skipped); split " +
           std::to_string(splits.train.size()) + "/" + std::to_string(splits.dev.size()) +
           "/" + std::to_string(splits.test.size()));
  return 0;
}

int run_pretrain(const Cli& cli, const std::string& corpus_path, const std::string& out,
                 std::string vocab_out, const std::string& metrics_path) {
  const ck::RunConfig config = cli.run_config();
  if (vocab_out.empty()) vocab_out = out + ".vocab";

  const auto docs = ck::read_documents(corpus_path);
  std::vector<ck::Sentence> sentences;
  {
    std::string all;
    for (const auto& d : docs) {
      all += d;
      all += '\n';
    }
    std::istringstream in(all);
    const ck::Vocab vocab = ck::build_vocab(in, config.min_count);
    vocab.save(vocab_out, config.meta_comment());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      for (auto& s : ck::split_sentences(docs[i], "doc" + std::to_string(i))) {
        sentences.push_back(std::move(s));
      }
    }
    ck::MetricsLogger metrics(metrics_path);
    const auto result =
        ck::train_stage1_mlm<double>(sentences, vocab, config.train, &metrics);
    ck::save_checkpoint(out, result.params, vocab.hash(), config.echo_json());
    cli.info("pretrained on " + std::to_string(sentences.size()) + " sentences, vocab " +
             std::to_string(vocab.size()));
  }
  return 0;
}

int run_inject(const Cli& cli, const std::string& train_path, const std::string& pairs_path,
               const std::string& dev_path, const std::string& init_ckpt,
               const std::string& vocab_path, const std::string& out,
               const std::string& metrics_path) {
  const ck::RunConfig config = cli.run_config();
  const ck::Vocab vocab = load_vocab_checked(vocab_path);
  Params params = load_params_checked(init_ckpt, vocab);
  const ck::TrainConfig train_config = merge_train_config(params, config);

  std::vector<ck::LabeledExample> train_examples;
  if (!train_path.empty()) {
    train_examples = ck::load_examples(train_path);
  } else if (!pairs_path.empty()) {
    std::vector<ck::CausalPair> positives;
    for (auto& p : ck::load_pairs(pairs_path)) {
      if (p.label == 1) positives.push_back(std::move(p));
    }
    train_examples = ck::negative_sample(positives, config.sampler_config());
    ck::class_weights(train_examples, config.weighting);
  } else {
    throw ck::ConfigError("inject needs --train or --pairs");
  }
  const std::vector<ck::LabeledExample> dev_examples =
      dev_path.empty() ? std::vector<ck::LabeledExample>() : ck::load_examples(dev_path);

  // theta_0: the stage-1 trunk as loaded.
  const auto snapshot = ck::AnchorSnapshot<double>::capture(params);
  ck::MetricsLogger metrics(metrics_path);
  Params trained = ck::train_stage2(train_examples, dev_examples, std::move(params),
                                    &snapshot, vocab, train_config, &metrics);
  ck::save_checkpoint(out, trained, vocab.hash(), config.echo_json());
  cli.info("injected causal pairs with the " +
           std::string(ck::to_string(train_config.objective)) + " objective over " +
           std::to_string(train_examples.size()) + " examples");
  return 0;
}

int run_finetune(const Cli& cli, const std::string& task, const std::string& train_path,
                 const std::string& dev_path, const std::string& init_ckpt,
                 const std::string& vocab_path, const std::string& out,
                 const std::string& metrics_path) {
  const ck::RunConfig config = cli.run_config();
  const ck::Vocab vocab = load_vocab_checked(vocab_path);
  Params params = load_params_checked(init_ckpt, vocab);
  const ck::TrainConfig train_config = merge_train_config(params, config);
  const auto snapshot = ck::AnchorSnapshot<double>::capture(params);
  ck::MetricsLogger metrics(metrics_path);

  if (task == "two-choice") {
    const auto train_items = train_path.empty() ? std::vector<ck::TwoChoiceItem>()
                                                : ck::load_two_choice(train_path);
    const auto dev_items = dev_path.empty() ? std::vector<ck::TwoChoiceItem>()
                                            : ck::load_two_choice(dev_path);
    Params tuned = ck::fine_tune_two_choice(train_items, dev_items, std::move(params),
                                            &snapshot, vocab, train_config, &metrics);
    ck::save_checkpoint(out, tuned, vocab.hash(), config.echo_json());
    cli.info("fine-tuned on " + std::to_string(train_items.size()) + " two-choice items");
  } else {
    const auto train_examples = train_path.empty() ? std::vector<ck::LabeledExample>()
                                                   : ck::load_examples(train_path);
    const auto dev_examples = dev_path.empty() ? std::vector<ck::LabeledExample>()
                                               : ck::load_examples(dev_path);
    Params tuned = ck::fine_tune_pairs(train_examples, dev_examples, std::move(params),
                                       &snapshot, vocab, train_config, &metrics);
    ck::save_checkpoint(out, tuned, vocab.hash(), config.echo_json());
    cli.info("fine-tuned on " + std::to_string(train_examples.size()) + " pair examples");
  }
  return 0;
}

ck::PairScorer make_scorer(const std::string& kind, const Params* params,
                           const ck::Vocab* vocab, const ck::CausalNetwork* net,
                           const ck::RunConfig& config, bool pair_task) {
  if (kind == "encoder") {
    if (!params || !vocab) throw ck::ConfigError("encoder scorer needs --ckpt and --vocab");
    if (pair_task) return ck::prob_scorer(*params, *vocab);
    return ck::rank_scorer(*params, *vocab);
  }
  if (!net) throw ck::ConfigError(kind + " scorer needs --net");
  if (kind == "pmi") return ck::phrase_pmi_scorer(*net);
  if (kind == "csnec") return ck::phrase_csnec_scorer(*net, config.strength_config());
  throw ck::ConfigError("unknown scorer: " + kind);
}

int run_eval(const Cli& cli, const std::string& task, const std::string& data_path,
             const std::string& report_path, const std::string& scorer_kind,
             const std::string& ckpt_path, const std::string& vocab_path,
             const std::string& net_path, bool zero_shot) {
  const ck::RunConfig config = cli.run_config();

  std::optional<ck::Vocab> vocab;
  std::optional<Params> params;
  std::optional<ck::CausalNetwork> net;
  std::uint64_t ckpt_before = 0;
  if (!vocab_path.empty()) vocab = load_vocab_checked(vocab_path);
  if (!ckpt_path.empty()) {
    if (!vocab) throw ck::ConfigError("--ckpt requires --vocab");
    ckpt_before = ck::file_fingerprint(ckpt_path);
    params = load_params_checked(ckpt_path, *vocab);
  }
  if (!net_path.empty()) net = ck::CausalNetwork::load(net_path);

  ck::EvalReport report;
  if (task == "pairs") {
    const auto examples = ck::load_examples(data_path);
    const auto scorer = make_scorer(scorer_kind, params ? &*params : nullptr,
                                    vocab ? &*vocab : nullptr, net ? &*net : nullptr,
                                    config, /*pair_task=*/true);
    std::vector<double> scores;
    std::vector<int> gold;
    for (const auto& ex : examples) {
      scores.push_back(scorer(ex.cause, ex.effect));
      gold.push_back(ex.label);
    }
    report = ck::pair_report(scores, gold, config.threshold);
  } else if (task == "two-choice") {
    const auto items = ck::load_two_choice(data_path);
    const auto scorer = make_scorer(scorer_kind, params ? &*params : nullptr,
                                    vocab ? &*vocab : nullptr, net ? &*net : nullptr,
                                    config, /*pair_task=*/false);
    report = ck::two_choice_eval(items, scorer, config.copa_swap);
  } else if (task == "n-choice") {
    const auto items = ck::load_n_choice(data_path);
    const auto scorer = make_scorer(scorer_kind, params ? &*params : nullptr,
                                    vocab ? &*vocab : nullptr, net ? &*net : nullptr,
                                    config, /*pair_task=*/false);
    report = ck::n_choice_eval(items, scorer, config.copa_swap);
  } else {
    throw ck::ConfigError("unknown eval task: " + task);
  }

  if (zero_shot) {
    if (ckpt_path.empty()) throw ck::ConfigError("zero-shot needs --ckpt");
    if (ck::file_fingerprint(ckpt_path) != ckpt_before) {
      throw ck::DataError("checkpoint changed during zero-shot evaluation");
    }
    report.zero_shot = true;
  }
  report.config_echo = config.echo_json();
  ck::save_report(report_path, report);

  std::ostringstream msg;
  msg << "task=" << report.task << " accuracy=" << report.accuracy;
  if (report.has_pr) msg << " f1=" << report.f1;
  if (report.ties > 0) msg << " ties=" << report.ties;
  cli.info(msg.str());
  return 0;
}

int run_convert_copa(const Cli& cli, const std::string& xml_path, const std::string& out) {
  const ck::RunConfig config = cli.run_config();
  const auto items = ck::parse_copa_xml(xml_path);
  ck::save_two_choice(out, items, config.meta_line());
  cli.info("converted " + std::to_string(items.size()) + " COPA items");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal-knowledge mining and injection toolkit"};
  app.set_version_flag("--version", ck::kToolVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Cli cli;

  // mine
  std::string mine_mode, mine_input, mine_out, mine_patterns, mine_stopwords;
  auto* mine = app.add_subcommand("mine", "extract cause-effect pairs from a corpus");
  mine->add_option("--mode", mine_mode, "word|sentence")
      ->required()
      ->check(CLI::IsMember({"word", "sentence"}));
  mine->add_option("--input", mine_input, "corpus file or directory")->required();
  mine->add_option("--out", mine_out, "output pair file (JSON lines)")->required();
  mine->add_option("--patterns", mine_patterns, "sentence-level pattern file");
  mine->add_option("--stopwords", mine_stopwords, "stopword list file");
  add_config_flag(mine, cli, "--phrase-tokens", "phrase_tokens",
                  "max following content tokens for word mining");
  add_common_flags(mine, cli);

  // net
  std::string net_pairs, net_out, net_scored_out;
  long long net_top = 0;
  auto* net = app.add_subcommand("net", "accumulate co-occurrence statistics");
  net->add_option("--pairs", net_pairs, "word-level pair file")->required();
  net->add_option("--out", net_out, "network file")->required();
  net->add_option("--top", net_top, "export the top-N pairs by necessity strength");
  net->add_option("--scored-out", net_scored_out, "scored pair output (with --top)");
  add_config_flag(net, cli, "--alpha", "alpha", "penalty exponent");
  add_common_flags(net, cli);

  // embed
  std::string embed_pairs, embed_out_cause, embed_out_effect, embed_harvest_out;
  auto* embed = app.add_subcommand("embed", "train causal word embeddings");
  embed->add_option("--pairs", embed_pairs, "sentence-level pair file")->required();
  embed->add_option("--out-cause", embed_out_cause, "cause embedding file")->required();
  embed->add_option("--out-effect", embed_out_effect, "effect embedding file")->required();
  embed->add_option("--harvest-out", embed_harvest_out, "harvested pair output");
  add_config_flag(embed, cli, "--dim", "embed_dim", "embedding size");
  add_config_flag(embed, cli, "--epochs", "embed_epochs", "training epochs");
  add_config_flag(embed, cli, "--margin", "embed_margin", "hinge margin");
  add_config_flag(embed, cli, "--negatives", "embed_negatives", "negatives per positive");
  add_config_flag(embed, cli, "--lr", "embed_lr", "learning rate");
  add_config_flag(embed, cli, "--topk", "embed_topk", "per-cause harvest cap (0 = none)");
  add_config_flag(embed, cli, "--threshold", "harvest_threshold", "harvest threshold");
  add_common_flags(embed, cli);

  // build-dataset
  std::vector<std::string> bd_pairs;
  std::string bd_conceptnet, bd_causalbank, bd_out_dir;
  auto* bd = app.add_subcommand("build-dataset",
                                "negative-sample, weight, and split training data");
  bd->add_option("--pairs", bd_pairs, "positive pair file(s)");
  bd->add_option("--conceptnet", bd_conceptnet, "ConceptNet Causes CSV");
  bd->add_option("--causalbank", bd_causalbank, "CausalBank-style TSV");
  bd->add_option("--out-dir", bd_out_dir, "output directory")->required();
  add_config_flag(bd, cli, "--k", "k", "negatives per positive");
  add_config_flag(bd, cli, "--max-resample", "max_resample", "rejection attempts");
  add_config_flag(bd, cli, "--weighting", "weighting", "balanced|frequency");
  add_config_flag(bd, cli, "--split-train", "split_train", "train fraction");
  add_config_flag(bd, cli, "--split-dev", "split_dev", "dev fraction");
  add_config_flag(bd, cli, "--split-test", "split_test", "test fraction");
  add_common_flags(bd, cli);

  // shared training flags
  auto add_train_flags = [&](CLI::App* cmd) {
    add_config_flag(cmd, cli, "--arch", "arch", "pool|attn");
    add_config_flag(cmd, cli, "--objective", "objective", "cls|rank");
    add_config_flag(cmd, cli, "--d-model", "d_model", "embedding width");
    add_config_flag(cmd, cli, "--hidden", "hidden", "pool MLP width");
    add_config_flag(cmd, cli, "--layers", "layers", "attention blocks");
    add_config_flag(cmd, cli, "--heads", "heads", "attention heads");
    add_config_flag(cmd, cli, "--d-ff", "d_ff", "feed-forward width");
    add_config_flag(cmd, cli, "--max-len", "max_len", "max sequence length");
    add_config_flag(cmd, cli, "--tie-mlm", "tie_mlm", "tie mlm head to embeddings");
    add_config_flag(cmd, cli, "--m", "m", "ranking margin");
    add_config_flag(cmd, cli, "--lambda-wd", "lambda_wd", "L2 term of the ranking loss");
    add_config_flag(cmd, cli, "--lambda-anchor", "lambda_anchor",
                    "anchor strength toward theta_0");
    add_config_flag(cmd, cli, "--lr", "lr", "learning rate");
    add_config_flag(cmd, cli, "--batch-size", "batch_size", "batch size");
    add_config_flag(cmd, cli, "--epochs", "epochs", "training epochs");
    add_config_flag(cmd, cli, "--eval-every", "eval_every", "dev evaluation period");
    add_config_flag(cmd, cli, "--mask-rate", "mask_rate", "mlm masking rate");
  };

  // pretrain-lm
  std::string pre_corpus, pre_out, pre_vocab_out, pre_metrics;
  auto* pre = app.add_subcommand("pretrain-lm", "stage 1: masked-token pre-training");
  pre->add_option("--corpus", pre_corpus, "one-document-per-line corpus")->required();
  pre->add_option("--out", pre_out, "output checkpoint")->required();
  pre->add_option("--vocab-out", pre_vocab_out, "vocab file (default: <out>.vocab)");
  pre->add_option("--metrics", pre_metrics, "JSON-lines metrics log");
  add_config_flag(pre, cli, "--min-count", "min_count", "vocab frequency threshold");
  add_train_flags(pre);
  add_common_flags(pre, cli);

  // inject
  std::string inj_train, inj_pairs, inj_dev, inj_init, inj_vocab, inj_out, inj_metrics;
  auto* inj = app.add_subcommand("inject", "stage 2: causal-knowledge injection");
  inj->add_option("--train", inj_train, "labeled example file (from build-dataset)");
  inj->add_option("--pairs", inj_pairs, "positive pair file (sampled on the fly)");
  inj->add_option("--dev", inj_dev, "dev example file for best-checkpoint retention");
  inj->add_option("--init", inj_init, "stage-1 checkpoint")->required();
  inj->add_option("--vocab", inj_vocab, "vocab file")->required();
  inj->add_option("--out", inj_out, "output checkpoint")->required();
  inj->add_option("--metrics", inj_metrics, "JSON-lines metrics log");
  add_config_flag(inj, cli, "--k", "k", "negatives per positive (with --pairs)");
  add_config_flag(inj, cli, "--weighting", "weighting", "balanced|frequency");
  add_train_flags(inj);
  add_common_flags(inj, cli);

  // finetune
  std::string ft_task, ft_train, ft_dev, ft_init, ft_vocab, ft_out, ft_metrics;
  auto* ft = app.add_subcommand("finetune", "stage 3: target-task fine-tuning");
  ft->add_option("--task", ft_task, "pairs|two-choice")
      ->required()
      ->check(CLI::IsMember({"pairs", "two-choice"}));
  ft->add_option("--train", ft_train, "task training file (omit for zero-shot identity)");
  ft->add_option("--dev", ft_dev, "task dev file");
  ft->add_option("--init", ft_init, "stage-2 checkpoint")->required();
  ft->add_option("--vocab", ft_vocab, "vocab file")->required();
  ft->add_option("--out", ft_out, "output checkpoint")->required();
  ft->add_option("--metrics", ft_metrics, "JSON-lines metrics log");
  add_train_flags(ft);
  add_common_flags(ft, cli);

  // eval / zero-shot
  std::string ev_task, ev_data, ev_report, ev_scorer = "encoder";
  std::string ev_ckpt, ev_vocab, ev_net;
  auto add_eval_options = [&](CLI::App* cmd) {
    cmd->add_option("--task", ev_task, "pairs|two-choice|n-choice")
        ->required()
        ->check(CLI::IsMember({"pairs", "two-choice", "n-choice"}));
    cmd->add_option("--data", ev_data, "task data file")->required();
    cmd->add_option("--report", ev_report, "output report JSON")->required();
    cmd->add_option("--scorer", ev_scorer, "encoder|pmi|csnec");
    cmd->add_option("--ckpt", ev_ckpt, "encoder checkpoint");
    cmd->add_option("--vocab", ev_vocab, "vocab file");
    cmd->add_option("--net", ev_net, "network file (pmi/csnec scorers)");
    add_config_flag(cmd, cli, "--threshold", "threshold", "positive threshold (pairs)");
    add_config_flag(cmd, cli, "--swap", "copa_swap", "swap the direction convention");
    add_config_flag(cmd, cli, "--alpha", "alpha", "penalty exponent (csnec)");
  };
  auto* ev = app.add_subcommand("eval", "run a task harness");
  add_eval_options(ev);
  add_common_flags(ev, cli);
  auto* zs = app.add_subcommand("zero-shot",
                                "evaluate a stage-2 checkpoint with no fine-tuning");
  add_eval_options(zs);
  add_common_flags(zs, cli);

  // convert-copa
  std::string copa_xml, copa_out;
  auto* copa = app.add_subcommand("convert-copa", "convert COPA XML to two-choice JSON lines");
  copa->add_option("--xml", copa_xml, "COPA XML file")->required();
  copa->add_option("--out", copa_out, "output two-choice file")->required();
  add_common_flags(copa, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Help/version exit 0, every other parse problem is a usage error.
    return code == 0 ? 0 : 1;
  }

  try {
    if (mine->parsed()) {
      return run_mine(cli, mine_mode, mine_input, mine_out, mine_patterns, mine_stopwords);
    }
    if (net->parsed()) return run_net(cli, net_pairs, net_out, net_top, net_scored_out);
    if (embed->parsed()) {
      return run_embed(cli, embed_pairs, embed_out_cause, embed_out_effect,
                       embed_harvest_out);
    }
    if (bd->parsed()) {
      return run_build_dataset(cli, bd_pairs, bd_conceptnet, bd_causalbank, bd_out_dir);
    }
    if (pre->parsed()) {
      return run_pretrain(cli, pre_corpus, pre_out, pre_vocab_out, pre_metrics);
    }
    if (inj->parsed()) {
      return run_inject(cli, inj_train, inj_pairs, inj_dev, inj_init, inj_vocab, inj_out,
                        inj_metrics);
    }
    if (ft->parsed()) {
      return run_finetune(cli, ft_task, ft_train, ft_dev, ft_init, ft_vocab, ft_out,
                          ft_metrics);
    }
    if (ev->parsed()) {
      return run_eval(cli, ev_task, ev_data, ev_report, ev_scorer, ev_ckpt, ev_vocab,
                      ev_net, /*zero_shot=*/false);
    }
    if (zs->parsed()) {
      return run_eval(cli, ev_task, ev_data, ev_report, ev_scorer, ev_ckpt, ev_vocab,
                      ev_net, /*zero_shot=*/true);
    }
    if (copa->parsed()) return run_convert_copa(cli, copa_xml, copa_out);
  } catch (const ck::ConfigError& e) {
    std::cerr << "causalkit: " << e.what() << '\n';
    return 1;
  } catch (const ck::DataError& e) {
    std::cerr << "causalkit: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "causalkit: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
