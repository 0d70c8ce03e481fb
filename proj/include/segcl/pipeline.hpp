#pragma once

#include <ostream>
#include <string>

#include "segcl/config.hpp"
#include "segcl/synth.hpp"

namespace segcl {

/// A required input file is absent; the CLI maps this to exit code 2.
class MissingInputError : public IoError {
 public:
  using IoError::IoError;
};

/// Each run_* stage reads its declared inputs, writes one artifact (plus
/// derived files where noted) and a `<artifact>.manifest.json` with the
/// effective config, its hash, seed, threads, and stage timings.
/// `out` carries the stage's user-facing report; `log` the verbose notes.

struct ExtractArgs {
  std::string input;      // corpus file (heuristic mode)
  std::string from_json;  // pre-extracted events file; overrides `input`
  std::string output;
  std::string format = "labeled-tsv";
  std::string stopwords_path;
  std::string entity_lexicon_path;
  int min_word_freq = 1;
};
void run_extract(const ExtractArgs& args, const PipelineConfig& cfg, std::ostream& out,
                 std::ostream& log);

struct BuildArgs {
  std::string events;
  std::string output;
};
void run_build(const BuildArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log);

struct MineArgs {
  std::string graphs;
  std::string output;
};
void run_mine(const MineArgs& args, const PipelineConfig& cfg, std::ostream& out,
              std::ostream& log);

struct TrainArgs {
  std::string graphs;
  std::string patterns;
  std::string output;  // checkpoint JSON; history lands at output + ".history.csv"
  std::string ablate;  // "", "structure", "event", "upper_bound"
  std::string sweep;   // "", "eta", "theta", "we", "ws"; output becomes a CSV
  std::string corpus;  // labeled corpus, required for --sweep
  std::string corpus_format = "labeled-tsv";
};
void run_train(const TrainArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log);

struct EmbedArgs {
  std::string graphs;
  std::string patterns;
  std::string checkpoint;
  std::string output;
};
void run_embed(const EmbedArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log);

struct EvalArgs {
  std::string embeddings;
  std::string corpus;
  std::string corpus_format = "labeled-tsv";
  std::string output;  // metrics CSV
};
void run_eval(const EvalArgs& args, const PipelineConfig& cfg, std::ostream& out,
              std::ostream& log);

struct SynthArgs {
  std::string output;
  SynthConfig synth;
};
void run_synth(const SynthArgs& args, const PipelineConfig& cfg, std::ostream& out,
               std::ostream& log);

}  // namespace segcl
