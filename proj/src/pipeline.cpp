#include "segcl/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "segcl/embed_io.hpp"
#include "segcl/threads.hpp"

namespace segcl {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void require_input(const std::string& path, const std::string& producer) {
  if (std::filesystem::exists(path)) return;
  std::string msg = "missing input file: " + path;
  if (!producer.empty()) msg += " (produce it with `segcl " + producer + "`)";
  throw MissingInputError(msg);
}

void write_manifest(const std::string& artifact, const std::string& command,
                    const PipelineConfig& cfg, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const std::map<std::string, double>& timings_ms, const json& extra) {
  json m;
  m["version"] = kManifestFormatVersion;
  m["command"] = command;
  m["config"] = json::parse(config_echo(cfg));
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  m["config_hash"] = hash_hex;
  m["seed"] = cfg.train.seed;
  m["threads"] = cfg.train.threads;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["timings_ms"] = timings_ms;
  m["extra"] = extra;
  const std::string path = artifact + ".manifest.json";
  std::ofstream f(path);
  if (!f) throw IoError("cannot open manifest for writing: " + path);
  f << m.dump(2) << "\n";
  if (!f) throw IoError("failed writing manifest: " + path);
}

std::set<std::string> load_word_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("missing input file: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (const std::string& tok : split_whitespace(line)) {
      words.insert(lowercase_ascii(tok));
    }
  }
  return words;
}

CorpusFormat parse_format(const std::string& s, const std::string& flag) {
  const auto f = corpus_format_from_string(s);
  if (!f) throw SchemaError(flag + ": unknown corpus format `" + s + "`");
  return *f;
}

/// Labels for the embedded docs, joined by doc_id; every embedded doc must
/// be present and labeled.
std::vector<std::string> labels_for(const EmbeddingTable& table, const Corpus& corpus) {
  std::vector<std::string> labels;
  labels.reserve(table.doc_ids.size());
  for (const std::string& id : table.doc_ids) {
    const Document* doc = corpus.find(id);
    if (doc == nullptr) throw SchemaError("doc " + id + " has an embedding but no corpus row");
    if (!doc->label) throw SchemaError("doc " + id + " has no label; eval needs labeled-tsv");
    labels.push_back(*doc->label);
  }
  return labels;
}

std::vector<IntraRelationGraph> load_marked_graphs(const std::string& graphs_path,
                                                   const std::string& patterns_path,
                                                   const PipelineConfig& cfg,
                                                   std::ostream& log) {
  std::vector<IntraRelationGraph> graphs = load_graphs(graphs_path);
  const std::vector<SkeletonPattern> patterns = load_patterns(patterns_path);
  mark_skeletons(graphs, patterns, cfg.top_m);
  log << "marked skeletons from " << patterns.size() << " patterns (top_m=" << cfg.top_m
      << ") across " << graphs.size() << " graphs\n";
  return graphs;
}

LossConfig apply_ablation(LossConfig loss, const std::string& ablate) {
  if (ablate.empty()) return loss;
  if (ablate == "structure") {
    loss.ablate_structure = true;
  } else if (ablate == "event") {
    loss.ablate_event = true;
  } else if (ablate == "upper_bound") {
    loss.ablate_upper_bound = true;
  } else {
    throw SchemaError("--ablate: expected structure, event or upper_bound, got `" + ablate +
                      "`");
  }
  return loss;
}

struct SweepGrid {
  std::string param;
  std::vector<double> values;
};

SweepGrid sweep_grid(const std::string& sweep) {
  SweepGrid grid;
  grid.param = sweep;
  if (sweep == "eta" || sweep == "theta") {
    for (int i = 1; i <= 9; ++i) grid.values.push_back(static_cast<double>(i) / 10.0);
  } else if (sweep == "we" || sweep == "ws") {
    for (int p = -3; p <= 3; ++p) grid.values.push_back(std::pow(10.0, p));
  } else {
    throw SchemaError("--sweep: expected eta, theta, we or ws, got `" + sweep + "`");
  }
  return grid;
}

LossConfig apply_sweep_value(LossConfig loss, const std::string& param, double value) {
  if (param == "eta") {
    loss.eta = value;
  } else if (param == "theta") {
    loss.theta = value;
  } else if (param == "we") {
    loss.w_e = value;
  } else {
    loss.w_s = value;
  }
  return loss;
}

}  // namespace

void run_extract(const ExtractArgs& args, const PipelineConfig& cfg, std::ostream& out,
                 std::ostream& log) {
  const auto start = Clock::now();
  std::vector<EventBlock> blocks;
  std::vector<std::string> inputs;
  json extra;
  if (!args.from_json.empty()) {
    require_input(args.from_json, "");
    inputs.push_back(args.from_json);
    blocks = load_events(args.from_json);
    extra["mode"] = "from-json";
  } else {
    require_input(args.input, "");
    inputs.push_back(args.input);
    ExtractorConfig ex;
    if (!args.stopwords_path.empty()) ex.stopwords = load_word_set(args.stopwords_path);
    if (!args.entity_lexicon_path.empty()) {
      ex.entity_lexicon = load_word_set(args.entity_lexicon_path);
    }
    CorpusOptions opts;
    opts.stopwords = ex.stopwords;
    opts.min_word_freq = args.min_word_freq;
    const Corpus corpus =
        load_corpus(args.input, parse_format(args.format, "--format"), opts);
    blocks = extract_events_heuristic(corpus, ex);
    extra["mode"] = "heuristic";
    extra["documents"] = corpus.size();
  }
  save_events(args.output, blocks);
  extra["blocks"] = blocks.size();
  write_manifest(args.output, "extract", cfg, inputs, {args.output},
                 {{"total", ms_since(start)}}, extra);
  out << "extract: wrote " << blocks.size() << " event blocks to " << args.output << "\n";
  log << config_echo(cfg);
}

void run_build(const BuildArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log) {
  const auto start = Clock::now();
  require_input(args.events, "extract");
  const std::vector<EventBlock> blocks = load_events(args.events);
  const int threads = resolve_threads(cfg.train.threads);
  const std::vector<IntraRelationGraph> graphs = build_graphs(blocks, cfg.graph, threads);
  save_graphs(args.output, graphs);

  std::size_t nodes = 0, edges = 0;
  for (const IntraRelationGraph& g : graphs) {
    nodes += g.nodes.size();
    edges += g.edges.size();
  }
  json extra;
  extra["graphs"] = graphs.size();
  extra["nodes"] = nodes;
  extra["edges"] = edges;
  write_manifest(args.output, "build", cfg, {args.events}, {args.output},
                 {{"total", ms_since(start)}}, extra);
  out << "build: wrote " << graphs.size() << " graphs (" << nodes << " nodes, " << edges
      << " edges) to " << args.output << "\n";
  log << config_echo(cfg);
}

void run_mine(const MineArgs& args, const PipelineConfig& cfg, std::ostream& out,
              std::ostream& log) {
  const auto start = Clock::now();
  require_input(args.graphs, "build");
  std::vector<IntraRelationGraph> graphs = load_graphs(args.graphs);
  if (cfg.miner.label_frequency_floor > 0) {
    graphs = prune_infrequent(graphs, cfg.miner.label_frequency_floor);
  }
  MinerConfig miner = cfg.miner;
  miner.min_support = resolve_min_support(miner.min_support, graphs.size());
  const int threads = resolve_threads(cfg.train.threads);
  const std::vector<SkeletonPattern> patterns = mine(graphs, miner, threads);
  save_patterns(args.output, patterns);

  json extra;
  extra["patterns"] = patterns.size();
  extra["min_support"] = miner.min_support;
  write_manifest(args.output, "mine", cfg, {args.graphs}, {args.output},
                 {{"total", ms_since(start)}}, extra);
  out << "mine: " << patterns.size() << " frequent patterns (min_support=" << miner.min_support
      << ") to " << args.output << "\n";
  log << format_pattern_table(patterns);
}

void run_train(const TrainArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log) {
  const auto start = Clock::now();
  require_input(args.graphs, "build");
  require_input(args.patterns, "mine");
  std::vector<IntraRelationGraph> graphs =
      load_marked_graphs(args.graphs, args.patterns, cfg, log);
  const int threads = resolve_threads(cfg.train.threads);

  if (!args.sweep.empty()) {
    if (args.corpus.empty()) {
      throw SchemaError("--sweep needs --corpus for probe labels");
    }
    require_input(args.corpus, "");
    const Corpus corpus =
        load_corpus(args.corpus, parse_format(args.corpus_format, "--corpus-format"), {});
    const SweepGrid grid = sweep_grid(args.sweep);

    std::ofstream csv(args.output);
    if (!csv) throw IoError("cannot open sweep file for writing: " + args.output);
    csv << "param,value,precision_mean,f1_mean,precision_best,f1_best\n";
    for (double value : grid.values) {
      const LossConfig loss = apply_sweep_value(cfg.loss, grid.param, value);
      TrainConfig tc = cfg.train;
      tc.threads = threads;
      const TrainResult result = train(graphs, cfg.encoder, loss, tc);
      const EmbeddingTable table =
          embed_graphs(graphs, result.params, cfg.encoder, threads);
      const std::vector<std::string> labels = labels_for(table, corpus);
      const ProbeAggregate agg =
          run_probe(table.vectors, labels, cfg.probe, cfg.train.seed, threads);
      const double f1_mean = cfg.probe.micro_f1 ? agg.mean.micro_f1 : agg.mean.macro_f1;
      const double f1_best = cfg.probe.micro_f1 ? agg.best.micro_f1 : agg.best.macro_f1;
      csv << grid.param << "," << format_double(value) << ","
          << format_double(agg.mean.precision) << "," << format_double(f1_mean) << ","
          << format_double(agg.best.precision) << "," << format_double(f1_best) << "\n";
      out << "sweep " << grid.param << "=" << format_double(value)
          << ": precision_mean=" << format_double(agg.mean.precision) << "\n";
    }
    if (!csv) throw IoError("failed writing sweep file: " + args.output);
    json extra;
    extra["sweep"] = grid.param;
    extra["grid_points"] = grid.values.size();
    write_manifest(args.output, "train", cfg, {args.graphs, args.patterns, args.corpus},
                   {args.output}, {{"total", ms_since(start)}}, extra);
    return;
  }

  const LossConfig loss = apply_ablation(cfg.loss, args.ablate);
  TrainConfig tc = cfg.train;
  tc.threads = threads;
  const TrainResult result = train(graphs, cfg.encoder, loss, tc);
  save_checkpoint(args.output, result.params, cfg.encoder, loss, cfg.train);
  const std::string history_path = args.output + ".history.csv";
  save_history_csv(history_path, result.history);

  json extra;
  extra["epochs"] = result.history.size();
  extra["converged"] = result.converged;
  extra["skipped_graphs"] = result.skipped_graphs;
  if (!args.ablate.empty()) extra["ablate"] = args.ablate;
  if (!result.history.empty()) {
    extra["final_zeta_total"] = result.history.back().report.zeta_total;
  }
  write_manifest(args.output, "train", cfg, {args.graphs, args.patterns},
                 {args.output, history_path}, {{"total", ms_since(start)}}, extra);
  out << "train: " << result.history.size() << " epochs ("
      << (result.converged ? "converged" : "epoch limit") << "), checkpoint " << args.output
      << "\n";
  log << config_echo(cfg);
}

void run_embed(const EmbedArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log) {
  const auto start = Clock::now();
  require_input(args.graphs, "build");
  require_input(args.patterns, "mine");
  require_input(args.checkpoint, "train");
  std::vector<IntraRelationGraph> graphs =
      load_marked_graphs(args.graphs, args.patterns, cfg, log);
  const Checkpoint ck = load_checkpoint(args.checkpoint);
  const int threads = resolve_threads(cfg.train.threads);

  std::vector<std::string> empty_docs;
  const EmbeddingTable table =
      embed_graphs(graphs, ck.params, ck.encoder, threads, &empty_docs);
  save_embeddings(args.output, table);

  json extra;
  extra["documents"] = table.doc_ids.size();
  extra["dim"] = table.vectors.cols();
  extra["empty_docs"] = empty_docs;
  extra["readout"] = ck.encoder.readout_structural ? "structural" : "anchor";
  write_manifest(args.output, "embed", cfg, {args.graphs, args.patterns, args.checkpoint},
                 {args.output, args.output + ".bin"}, {{"total", ms_since(start)}}, extra);
  out << "embed: " << table.doc_ids.size() << " documents x " << table.vectors.cols()
      << " dims to " << args.output << "\n";
  log << config_echo(cfg);
}

void run_eval(const EvalArgs& args, const PipelineConfig& cfg, std::ostream& out,
              std::ostream& log) {
  const auto start = Clock::now();
  require_input(args.embeddings, "embed");
  require_input(args.corpus, "");
  const EmbeddingTable table = load_embeddings(args.embeddings);
  const Corpus corpus =
      load_corpus(args.corpus, parse_format(args.corpus_format, "--corpus-format"), {});
  const std::vector<std::string> labels = labels_for(table, corpus);
  const int threads = resolve_threads(cfg.train.threads);
  const ProbeAggregate agg =
      run_probe(table.vectors, labels, cfg.probe, cfg.train.seed, threads);

  const std::string csv = format_metrics_csv(agg, cfg.probe.micro_f1);
  std::ofstream f(args.output);
  if (!f) throw IoError("cannot open metrics file for writing: " + args.output);
  f << csv;
  if (!f) throw IoError("failed writing metrics file: " + args.output);

  json extra;
  extra["documents"] = table.doc_ids.size();
  extra["precision_mean"] = agg.mean.precision;
  extra["precision_best"] = agg.best.precision;
  write_manifest(args.output, "eval", cfg, {args.embeddings, args.corpus}, {args.output},
                 {{"total", ms_since(start)}}, extra);
  out << format_metrics_table(agg, cfg.probe.micro_f1);
  log << config_echo(cfg);
}

void run_synth(const SynthArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log) {
  const auto start = Clock::now();
  save_synthetic_corpus(args.output, args.synth);
  json extra;
  extra["docs"] = args.synth.docs;
  extra["seed"] = args.synth.seed;
  write_manifest(args.output, "synth", cfg, {}, {args.output}, {{"total", ms_since(start)}},
                 extra);
  out << "synth: wrote " << args.synth.docs << " documents to " << args.output << "\n";
  log << config_echo(cfg);
}

}  // namespace segcl
