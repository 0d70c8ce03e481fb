#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "segcl/pipeline.hpp"

namespace {

int dispatch(const std::string& command, const segcl::PipelineConfig& cfg,
             const std::function<void(std::ostream&, std::ostream&)>& stage, bool verbose) {
  static std::ostream null_stream(nullptr);
  std::ostream& log = verbose ? std::cerr : null_stream;
  try {
    (void)command;
    stage(std::cout, log);
    return 0;
  } catch (const segcl::MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segcl: event-graph construction, skeleton mining, contrastive "
               "embeddings, and linear-probe evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool verbose = false;
  app.add_option("--config", config_path, "pipeline config file (INI sections)");
  app.add_option("--seed", seed, "override the [train] seed");
  app.add_option("--threads", threads,
                 "override the [train] thread count (0 = SEGCL_THREADS or hardware)");
  app.add_flag("--verbose", verbose, "verbose notes on stderr");

  segcl::ExtractArgs extract;
  auto* cmd_extract = app.add_subcommand("extract", "corpus -> canonical events file");
  cmd_extract->add_option("--in", extract.input, "corpus file");
  cmd_extract->add_option("--from-json", extract.from_json,
                          "pre-extracted events JSONL (skips the heuristic)");
  cmd_extract->add_option("--out", extract.output, "events JSONL output")->required();
  cmd_extract->add_option("--format", extract.format, "plain-lines or labeled-tsv");
  cmd_extract->add_option("--stopwords", extract.stopwords_path, "stopword list, one per line");
  cmd_extract->add_option("--entity-lexicon", extract.entity_lexicon_path,
                          "extra entity surfaces, one per line");
  cmd_extract->add_option("--min-word-freq", extract.min_word_freq,
                          "drop tokens seen fewer times corpus-wide (1 = keep all)");

  segcl::BuildArgs build;
  auto* cmd_build = app.add_subcommand("build", "events -> intra-relation graphs");
  cmd_build->add_option("--events", build.events, "events JSONL input")->required();
  cmd_build->add_option("--out", build.output, "graphs JSON output")->required();

  segcl::MineArgs mine;
  auto* cmd_mine = app.add_subcommand("mine", "graphs -> frequent skeleton patterns");
  cmd_mine->add_option("--graphs", mine.graphs, "graphs JSON input")->required();
  cmd_mine->add_option("--out", mine.output, "patterns JSON output")->required();

  segcl::TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "graphs + patterns -> model checkpoint");
  cmd_train->add_option("--graphs", train.graphs, "graphs JSON input")->required();
  cmd_train->add_option("--patterns", train.patterns, "patterns JSON input")->required();
  cmd_train->add_option("--out", train.output, "checkpoint JSON (or sweep CSV) output")
      ->required();
  cmd_train->add_option("--ablate", train.ablate, "drop one loss term: structure, event or "
                                                  "upper_bound");
  cmd_train->add_option("--sweep", train.sweep,
                        "grid-run one hyperparameter: eta, theta, we or ws");
  cmd_train->add_option("--corpus", train.corpus, "labeled corpus (sweep probe labels)");
  cmd_train->add_option("--corpus-format", train.corpus_format, "plain-lines or labeled-tsv");

  segcl::EmbedArgs embed;
  auto* cmd_embed = app.add_subcommand("embed", "graphs + checkpoint -> document embeddings");
  cmd_embed->add_option("--graphs", embed.graphs, "graphs JSON input")->required();
  cmd_embed->add_option("--patterns", embed.patterns, "patterns JSON input")->required();
  cmd_embed->add_option("--checkpoint", embed.checkpoint, "checkpoint JSON input")->required();
  cmd_embed->add_option("--out", embed.output, "embeddings TSV output (+ .bin sidecar)")
      ->required();

  segcl::EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "embeddings + labels -> probe metrics");
  cmd_eval->add_option("--embeddings", eval.embeddings, "embeddings TSV input")->required();
  cmd_eval->add_option("--corpus", eval.corpus, "labeled corpus input")->required();
  cmd_eval->add_option("--corpus-format", eval.corpus_format, "plain-lines or labeled-tsv");
  cmd_eval->add_option("--out", eval.output, "metrics CSV output")->required();

  segcl::SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "generate the two-class benchmark corpus");
  cmd_synth->add_option("--out", synth.output, "labeled-tsv output")->required();
  cmd_synth->add_option("--docs", synth.synth.docs, "document count (even)");
  cmd_synth->add_option("--min-sentences", synth.synth.min_sentences, "chain length lower bound");
  cmd_synth->add_option("--max-sentences", synth.synth.max_sentences, "chain length upper bound");
  cmd_synth->add_option("--entity-pool", synth.synth.entity_pool, "shared entity pool size");
  cmd_synth->add_option("--predicate-pool", synth.synth.predicate_pool,
                        "shared predicate pool size");
  cmd_synth->add_option("--synth-seed", synth.synth.seed, "corpus generator seed");

  CLI11_PARSE(app, argc, argv);

  segcl::PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = segcl::load_config(config_path);
    if (seed) cfg.train.seed = *seed;
    if (threads) cfg.train.threads = *threads;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (cmd_extract->parsed()) {
    if (extract.input.empty() && extract.from_json.empty()) {
      std::cerr << "error: extract needs --in or --from-json\n";
      return 1;
    }
    return dispatch("extract", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_extract(extract, cfg, out, log);
                    },
                    verbose);
  }
  if (cmd_build->parsed()) {
    return dispatch("build", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_build(build, cfg, out, log);
                    },
                    verbose);
  }
  if (cmd_mine->parsed()) {
    return dispatch("mine", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_mine(mine, cfg, out, log);
                    },
                    verbose);
  }
  if (cmd_train->parsed()) {
    return dispatch("train", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_train(train, cfg, out, log);
                    },
                    verbose);
  }
  if (cmd_embed->parsed()) {
    return dispatch("embed", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_embed(embed, cfg, out, log);
                    },
                    verbose);
  }
  if (cmd_eval->parsed()) {
    return dispatch("eval", cfg,
                    [&](std::ostream& out, std::ostream& log) {
                      segcl::run_eval(eval, cfg, out, log);
                    },
                    verbose);
  }
  return dispatch("synth", cfg,
                  [&](std::ostream& out, std::ostream& log) {
                    segcl::run_synth(synth, cfg, out, log);
                  },
                  verbose);
}
