#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "segcl/encoder.hpp"
#include "segcl/graph.hpp"

namespace segcl {

struct EmbeddingTable {
  std::vector<std::string> doc_ids;
  Eigen::MatrixXd vectors;  // docs x d

  Eigen::Index find(const std::string& doc_id) const;
};

/// One document vector per graph: readout over the anchor (default) or the
/// structural embedding per cfg.readout_structural. Zero-node graphs embed
/// as zero vectors; their ids are appended to `empty_docs` when given.
EmbeddingTable embed_graphs(std::span<const IntraRelationGraph> graphs,
                            const ModelParams& params, const EncoderConfig& cfg,
                            int threads = 1, std::vector<std::string>* empty_docs = nullptr);

/// Text format: `doc_id<TAB>v1,v2,...` per row, plus a binary sidecar at
/// path + ".bin" (magic SEGB, version, rows, cols, row-major doubles).
void save_embeddings(const std::string& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::string& path);
Eigen::MatrixXd load_embeddings_sidecar(const std::string& path);

}  // namespace segcl
