#pragma once

#include <Eigen/Core>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "segcl/ad.hpp"
#include "segcl/graph.hpp"
#include "segcl/vectors.hpp"

namespace segcl {

enum class FeatureMode { OnehotHashed, Pretrained, RandomLearnable };

std::optional<FeatureMode> feature_mode_from_string(std::string_view s);
std::string_view to_string(FeatureMode m);

struct EncoderConfig {
  int d0 = 128;      // input feature dimension
  int hidden = 128;  // hidden layer width of both towers
  int out = 128;     // embedding dimension d
  FeatureMode feature_mode = FeatureMode::OnehotHashed;
  std::string pretrained_vectors;
  double rho = 1.5;  // skeleton row weight, > 0
  double leaky_slope = 0.01;
  bool event_from_anchor = false;   // event positive sampled from anchor H
  bool readout_structural = false;  // document readout from H_plus_s

  void validate() const;
};

/// Trainable state. Biases are stored as 1 x width rows. The feature table
/// is empty unless feature_mode is random-learnable.
struct ModelParams {
  Eigen::MatrixXd mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  Eigen::MatrixXd gcn_w1, gcn_w2;
  Eigen::MatrixXd feature_table;  // vocab x d0
  std::vector<std::string> feature_vocab;  // sorted, unique

  int vocab_index(const std::string& surface) const;
};

/// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
/// The vocabulary (random-learnable mode) is the sorted set of node surfaces
/// in `graphs`; its rows derive from each surface alone, so the table is
/// independent of graph order.
ModelParams init_params(const EncoderConfig& cfg, std::uint64_t seed,
                        std::span<const IntraRelationGraph> graphs);

/// Uniform(-1/sqrt(d0), 1/sqrt(d0)) row derived from the surface hash.
Eigen::RowVectorXd learnable_init_row(const std::string& surface, int d0);

/// One-hot row with the 1 at fnv1a64(surface) mod d0.
Eigen::RowVectorXd hashed_onehot_row(const std::string& surface, int d0);

/// Node features H^0. `vectors` is required for pretrained mode (OOV rows
/// fall back to hashed one-hots), `params` for random-learnable mode
/// (surfaces outside the vocabulary fall back to their init rows).
Eigen::MatrixXd init_features(const IntraRelationGraph& g, const EncoderConfig& cfg,
                              const ModelParams* params = nullptr,
                              const WordVectors* vectors = nullptr);

/// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
Eigen::MatrixXd normalized_adjacency(const IntraRelationGraph& g);

/// Row-stochastic neighbor averaging matrix; isolated nodes get zero rows.
Eigen::MatrixXd neighbor_mean_matrix(const IntraRelationGraph& g);

/// Two sigmoid layers; the anchor embedding.
Eigen::MatrixXd mlp_forward(const Eigen::MatrixXd& x, const ModelParams& params);

/// Two GCN layers: per layer LeakyReLU(A_norm * scale_rho(concat(H, AGG)) * W)
/// where AGG is the neighbor row-mean and scale_rho multiplies skeleton-node
/// rows by rho. The structural positive.
Eigen::MatrixXd gcn_forward(const IntraRelationGraph& g, const Eigen::MatrixXd& x,
                            const ModelParams& params, const EncoderConfig& cfg);

/// Uniform random permutation without fixed points; n = 2 gives the swap.
std::vector<int> random_derangement(int n, std::mt19937_64& rng);

/// k independent row derangements of h.
std::vector<Eigen::MatrixXd> shuffle_negative(const Eigen::MatrixXd& h,
                                              std::uint64_t seed, int k);

/// Mean of the in_skeleton rows; with no flags set, mean of all rows.
Eigen::RowVectorXd event_embedding(const Eigen::MatrixXd& h, const IntraRelationGraph& g);

/// The four embeddings the losses compare.
struct EmbeddingSet {
  Eigen::MatrixXd anchor;                 // H, n x d
  std::vector<Eigen::MatrixXd> negatives; // k row-deranged copies of H
  Eigen::MatrixXd structural;             // H+_s, n x d
  Eigen::RowVectorXd event;               // H+_e, 1 x d
};

/// Inference-path forward (no dropout): anchor, k negatives, structural and
/// event positives for one graph.
EmbeddingSet encode_plain(const IntraRelationGraph& g, const Eigen::MatrixXd& x,
                          const ModelParams& params, const EncoderConfig& cfg,
                          std::uint64_t seed, int k_negatives);

/// Column mean of the anchor; the document vector.
Eigen::RowVectorXd readout(const Eigen::MatrixXd& h);

/// Row positions of flagged nodes; all positions when nothing is flagged.
std::vector<int> skeleton_rows(const IntraRelationGraph& g);

/// Graph-constant operators shared by plain and taped forwards.
struct GraphOperators {
  Eigen::MatrixXd a_norm;         // normalized adjacency with self-loops
  Eigen::MatrixXd neighbor_mean;  // AGG operator
  Eigen::VectorXd skeleton_scale; // rho on skeleton rows, 1 elsewhere
  std::vector<int> skeleton;      // rows feeding the event positive
};

GraphOperators graph_operators(const IntraRelationGraph& g, double rho);

/// Fixed randomness of one training forward: negative permutations and
/// inverted-dropout masks (empty matrices disable dropout).
struct ForwardPlan {
  std::vector<std::vector<int>> negative_perms;
  Eigen::MatrixXd mlp_mask;
  Eigen::MatrixXd gcn_mask;
};

ForwardPlan make_forward_plan(int nodes, int hidden, int k_negatives, double dropout,
                              std::mt19937_64& neg_rng, std::mt19937_64& drop_rng);

struct ParamVars {
  ad::TapeD::Var mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  ad::TapeD::Var gcn_w1, gcn_w2;
  ad::TapeD::Var feature_table;  // invalid unless random-learnable
};

ParamVars register_params(ad::TapeD& tape, const ModelParams& params);

/// Node features as a tape variable: a constant leaf for one-hot and
/// pretrained modes, a gather from the trainable table otherwise.
ad::TapeD::Var features_var(ad::TapeD& tape, const IntraRelationGraph& g,
                            const EncoderConfig& cfg, const ModelParams& params,
                            const ParamVars& vars, const WordVectors* vectors);

struct TapedEmbeddings {
  ad::TapeD::Var anchor;
  ad::TapeD::Var structural;
  ad::TapeD::Var event;  // 1 x d
  std::vector<ad::TapeD::Var> negatives;
};

/// Taped mirror of mlp_forward/gcn_forward/shuffle_negative/event_embedding;
/// matches the plain functions exactly when the plan carries no dropout.
TapedEmbeddings encode_taped(ad::TapeD& tape, const GraphOperators& ops,
                             ad::TapeD::Var features, const ParamVars& vars,
                             const ForwardPlan& plan, const EncoderConfig& cfg);

}  // namespace segcl
