#pragma once

#include <span>
#include <string>
#include <vector>

#include "segcl/encoder.hpp"
#include "segcl/graph.hpp"
#include "segcl/loss.hpp"

namespace segcl {

struct TrainConfig {
  double learning_rate = 0.005;
  double weight_decay = 0.0001;
  double reg_factor = 1e-6;  // L2 penalty on embeddings, outside zeta_total
  double dropout = 0.4;
  int max_epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 42;
  int threads = 1;
  int convergence_window = 10;
  double convergence_tol = 1e-4;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  LossReport report;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  bool converged = false;
  int skipped_graphs = 0;  // graphs with fewer than 2 nodes never train
};

/// Mini-batch SGD with weight decay on the taped objective. Negatives and
/// dropout masks are redrawn per (epoch, graph) from seed-derived streams,
/// and gradients reduce in a fixed order, so results do not depend on the
/// thread count.
TrainResult train(std::span<const IntraRelationGraph> graphs, const EncoderConfig& enc,
                  const LossConfig& loss_cfg, const TrainConfig& cfg);

/// One row per epoch: epoch,zeta_s,zeta_e,zeta_u,zeta_total.
void save_history_csv(const std::string& path, std::span<const EpochRecord> history);

struct Checkpoint {
  ModelParams params;
  EncoderConfig encoder;
  LossConfig loss;
  TrainConfig train;
};

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const EncoderConfig& enc, const LossConfig& loss_cfg,
                     const TrainConfig& train_cfg);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace segcl
