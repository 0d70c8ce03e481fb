#pragma once

#include <string>

#include "segcl/graph.hpp"
#include "segcl/loss.hpp"
#include "segcl/miner.hpp"
#include "segcl/probe.hpp"
#include "segcl/train.hpp"

namespace segcl {

/// Everything the pipeline stages read, one section per module config.
/// Every key is optional; the compiled-in defaults apply when absent.
struct PipelineConfig {
  GraphBuildConfig graph;
  MinerConfig miner;
  int top_m = 3;  // lives in [miner] as `top_m`
  EncoderConfig encoder;
  LossConfig loss;
  TrainConfig train;
  ProbeConfig probe;

  void validate() const;
};

/// Strict INI: `[section]` headers, `key = value` pairs, `#` or `;` comment
/// lines. Unknown sections or keys are errors naming the offender.
PipelineConfig parse_config(const std::string& text, const std::string& where);
PipelineConfig load_config(const std::string& path);

/// Canonical echo of the effective config (alphabetical keys), used for
/// provenance; the hash is FNV-1a over this string.
std::string config_echo(const PipelineConfig& cfg);
std::uint64_t config_hash(const PipelineConfig& cfg);

}  // namespace segcl
