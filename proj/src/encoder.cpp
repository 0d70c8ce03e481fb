#include "segcl/encoder.hpp"

#include <algorithm>
#include <set>

#include "segcl/core.hpp"

namespace segcl {

std::optional<FeatureMode> feature_mode_from_string(std::string_view s) {
  if (s == "onehot-hashed") return FeatureMode::OnehotHashed;
  if (s == "pretrained") return FeatureMode::Pretrained;
  if (s == "random-learnable") return FeatureMode::RandomLearnable;
  return std::nullopt;
}

std::string_view to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::OnehotHashed: return "onehot-hashed";
    case FeatureMode::Pretrained: return "pretrained";
    case FeatureMode::RandomLearnable: return "random-learnable";
  }
  return "onehot-hashed";
}

void EncoderConfig::validate() const {
  if (d0 < 1) throw SchemaError("encoder d0 must be >= 1");
  if (hidden < 1) throw SchemaError("encoder hidden must be >= 1");
  if (out < 1) throw SchemaError("encoder out must be >= 1");
  if (!(rho > 0.0)) throw SchemaError("rho must be a positive real");
  if (leaky_slope < 0.0) throw SchemaError("leaky_slope must be >= 0");
  if (feature_mode == FeatureMode::Pretrained && pretrained_vectors.empty()) {
    throw SchemaError("pretrained feature mode requires a pretrained_vectors file");
  }
}

int ModelParams::vocab_index(const std::string& surface) const {
  auto it = std::lower_bound(feature_vocab.begin(), feature_vocab.end(), surface);
  if (it == feature_vocab.end() || *it != surface) return -1;
  return static_cast<int>(it - feature_vocab.begin());
}

namespace {

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

Eigen::RowVectorXd learnable_init_row(const std::string& surface, int d0) {
  auto rng = make_rng(fnv1a64(surface), rng_stream::kFeatures);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d0));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::RowVectorXd row(d0);
  for (int j = 0; j < d0; ++j) row(j) = dist(rng);
  return row;
}

Eigen::RowVectorXd hashed_onehot_row(const std::string& surface, int d0) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(d0);
  row(static_cast<int>(fnv1a64(surface) % static_cast<std::uint64_t>(d0))) = 1.0;
  return row;
}

ModelParams init_params(const EncoderConfig& cfg, std::uint64_t seed,
                        std::span<const IntraRelationGraph> graphs) {
  cfg.validate();
  auto rng = make_rng(seed, rng_stream::kParamInit);
  ModelParams p;
  const auto bound = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
  p.mlp_w1 = uniform_matrix(cfg.d0, cfg.hidden, bound(cfg.d0), rng);
  p.mlp_b1 = Eigen::MatrixXd::Zero(1, cfg.hidden);
  p.mlp_w2 = uniform_matrix(cfg.hidden, cfg.out, bound(cfg.hidden), rng);
  p.mlp_b2 = Eigen::MatrixXd::Zero(1, cfg.out);
  p.gcn_w1 = uniform_matrix(2 * cfg.d0, cfg.hidden, bound(2 * cfg.d0), rng);
  p.gcn_w2 = uniform_matrix(2 * cfg.hidden, cfg.out, bound(2 * cfg.hidden), rng);

  if (cfg.feature_mode == FeatureMode::RandomLearnable) {
    std::set<std::string> vocab;
    for (const IntraRelationGraph& g : graphs) {
      for (const Node& n : g.nodes) vocab.insert(n.surface);
    }
    p.feature_vocab.assign(vocab.begin(), vocab.end());
    p.feature_table.resize(static_cast<Eigen::Index>(p.feature_vocab.size()), cfg.d0);
    for (std::size_t i = 0; i < p.feature_vocab.size(); ++i) {
      p.feature_table.row(static_cast<Eigen::Index>(i)) =
          learnable_init_row(p.feature_vocab[i], cfg.d0);
    }
  } else {
    p.feature_table.resize(0, cfg.d0);
  }
  return p;
}

Eigen::MatrixXd init_features(const IntraRelationGraph& g, const EncoderConfig& cfg,
                              const ModelParams* params, const WordVectors* vectors) {
  cfg.validate();
  const int n = g.node_count();
  Eigen::MatrixXd x(n, cfg.d0);
  switch (cfg.feature_mode) {
    case FeatureMode::OnehotHashed:
      for (int i = 0; i < n; ++i) {
        x.row(i) = hashed_onehot_row(g.nodes[static_cast<std::size_t>(i)].surface, cfg.d0);
      }
      break;
    case FeatureMode::Pretrained: {
      if (vectors == nullptr) {
        throw Error("init_features: pretrained mode requires loaded word vectors");
      }
      if (vectors->dim() != cfg.d0) {
        throw ShapeError("init_features: pretrained vector dim " +
                         std::to_string(vectors->dim()) + " does not match d0 " +
                         std::to_string(cfg.d0));
      }
      for (int i = 0; i < n; ++i) {
        const std::string& surface = g.nodes[static_cast<std::size_t>(i)].surface;
        if (const Eigen::VectorXd* v = vectors->find(surface)) {
          x.row(i) = v->transpose();
        } else {
          x.row(i) = hashed_onehot_row(surface, cfg.d0);
        }
      }
      break;
    }
    case FeatureMode::RandomLearnable: {
      if (params == nullptr) {
        throw Error("init_features: random-learnable mode requires model params");
      }
      for (int i = 0; i < n; ++i) {
        const std::string& surface = g.nodes[static_cast<std::size_t>(i)].surface;
        const int row = params->vocab_index(surface);
        if (row >= 0) {
          x.row(i) = params->feature_table.row(row);
        } else {
          x.row(i) = learnable_init_row(surface, cfg.d0);
        }
      }
      break;
    }
  }
  return x;
}

Eigen::MatrixXd normalized_adjacency(const IntraRelationGraph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd a = g.adjacency();
  a += Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d_inv_sqrt = a.rowwise().sum().array().rsqrt();
  return d_inv_sqrt.asDiagonal() * a * d_inv_sqrt.asDiagonal();
}

Eigen::MatrixXd neighbor_mean_matrix(const IntraRelationGraph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd a = g.adjacency();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    if (deg > 0.0) out.row(i) = a.row(i) / deg;
  }
  return out;
}

Eigen::MatrixXd mlp_forward(const Eigen::MatrixXd& x, const ModelParams& params) {
  if (x.cols() != params.mlp_w1.rows()) {
    throw ShapeError("mlp_forward: features have " + std::to_string(x.cols()) +
                     " cols but mlp_w1 expects " + std::to_string(params.mlp_w1.rows()));
  }
  auto layer = [](const Eigen::MatrixXd& in, const Eigen::MatrixXd& w,
                  const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
    Eigen::MatrixXd z = (in * w).rowwise() + b.row(0);
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  };
  return layer(layer(x, params.mlp_w1, params.mlp_b1), params.mlp_w2, params.mlp_b2);
}

std::vector<int> skeleton_rows(const IntraRelationGraph& g) {
  std::vector<int> rows;
  for (int i = 0; i < g.node_count(); ++i) {
    if (g.nodes[static_cast<std::size_t>(i)].in_skeleton) rows.push_back(i);
  }
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(g.node_count()));
    for (int i = 0; i < g.node_count(); ++i) rows[static_cast<std::size_t>(i)] = i;
  }
  return rows;
}

GraphOperators graph_operators(const IntraRelationGraph& g, double rho) {
  GraphOperators ops;
  ops.a_norm = normalized_adjacency(g);
  ops.neighbor_mean = neighbor_mean_matrix(g);
  ops.skeleton_scale = Eigen::VectorXd::Ones(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) {
    if (g.nodes[static_cast<std::size_t>(i)].in_skeleton) ops.skeleton_scale(i) = rho;
  }
  ops.skeleton = skeleton_rows(g);
  return ops;
}

Eigen::MatrixXd gcn_forward(const IntraRelationGraph& g, const Eigen::MatrixXd& x,
                            const ModelParams& params, const EncoderConfig& cfg) {
  if (g.node_count() == 0) throw ShapeError("gcn_forward: empty graph");
  if (x.rows() != g.node_count()) {
    throw ShapeError("gcn_forward: feature rows do not match node count");
  }
  const GraphOperators ops = graph_operators(g, cfg.rho);
  auto layer = [&](const Eigen::MatrixXd& h, const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
    if (2 * h.cols() != w.rows()) {
      throw ShapeError("gcn_forward: concat width " + std::to_string(2 * h.cols()) +
                       " does not match weight rows " + std::to_string(w.rows()));
    }
    Eigen::MatrixXd m(h.rows(), 2 * h.cols());
    m << h, ops.neighbor_mean * h;
    m = ops.skeleton_scale.asDiagonal() * m;
    Eigen::MatrixXd z = ops.a_norm * m * w;
    return z.unaryExpr([&](double v) { return v > 0.0 ? v : cfg.leaky_slope * v; });
  };
  return layer(layer(x, params.gcn_w1), params.gcn_w2);
}

std::vector<int> random_derangement(int n, std::mt19937_64& rng) {
  if (n < 2) throw Error("cannot shuffle a single node");
  std::vector<int> perm(static_cast<std::size_t>(n));
  while (true) {
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> dist(0, i);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(dist(rng))]);
    }
    bool fixed_point = false;
    for (int i = 0; i < n; ++i) {
      if (perm[static_cast<std::size_t>(i)] == i) {
        fixed_point = true;
        break;
      }
    }
    if (!fixed_point) return perm;
  }
}

std::vector<Eigen::MatrixXd> shuffle_negative(const Eigen::MatrixXd& h,
                                              std::uint64_t seed, int k) {
  if (k < 1) throw Error("shuffle_negative: k must be >= 1");
  auto rng = make_rng(seed, rng_stream::kNegatives);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const std::vector<int> perm = random_derangement(static_cast<int>(h.rows()), rng);
    Eigen::MatrixXd neg(h.rows(), h.cols());
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
      neg.row(r) = h.row(perm[static_cast<std::size_t>(r)]);
    }
    out.push_back(std::move(neg));
  }
  return out;
}

Eigen::RowVectorXd event_embedding(const Eigen::MatrixXd& h, const IntraRelationGraph& g) {
  if (h.rows() != g.node_count()) {
    throw ShapeError("event_embedding: embedding rows do not match node count");
  }
  const std::vector<int> rows = skeleton_rows(g);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(h.cols());
  for (int r : rows) mean += h.row(r);
  return mean / static_cast<double>(rows.size());
}

Eigen::RowVectorXd readout(const Eigen::MatrixXd& h) {
  if (h.rows() == 0) throw ShapeError("readout: empty embedding");
  return h.colwise().mean();
}

EmbeddingSet encode_plain(const IntraRelationGraph& g, const Eigen::MatrixXd& x,
                          const ModelParams& params, const EncoderConfig& cfg,
                          std::uint64_t seed, int k_negatives) {
  EmbeddingSet set;
  set.anchor = mlp_forward(x, params);
  set.structural = gcn_forward(g, x, params, cfg);
  set.negatives = shuffle_negative(set.anchor, seed, k_negatives);
  set.event = event_embedding(cfg.event_from_anchor ? set.anchor : set.structural, g);
  return set;
}

ForwardPlan make_forward_plan(int nodes, int hidden, int k_negatives, double dropout,
                              std::mt19937_64& neg_rng, std::mt19937_64& drop_rng) {
  ForwardPlan plan;
  plan.negative_perms.reserve(static_cast<std::size_t>(k_negatives));
  for (int i = 0; i < k_negatives; ++i) {
    plan.negative_perms.push_back(random_derangement(nodes, neg_rng));
  }
  if (dropout > 0.0) {
    const double keep = 1.0 - dropout;
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    auto mask = [&]() {
      Eigen::MatrixXd m(nodes, hidden);
      for (int i = 0; i < nodes; ++i) {
        for (int j = 0; j < hidden; ++j) m(i, j) = dist(drop_rng) < keep ? 1.0 / keep : 0.0;
      }
      return m;
    };
    plan.mlp_mask = mask();
    plan.gcn_mask = mask();
  }
  return plan;
}

ParamVars register_params(ad::TapeD& tape, const ModelParams& params) {
  ParamVars vars;
  vars.mlp_w1 = tape.input(params.mlp_w1);
  vars.mlp_b1 = tape.input(params.mlp_b1);
  vars.mlp_w2 = tape.input(params.mlp_w2);
  vars.mlp_b2 = tape.input(params.mlp_b2);
  vars.gcn_w1 = tape.input(params.gcn_w1);
  vars.gcn_w2 = tape.input(params.gcn_w2);
  if (params.feature_table.rows() > 0) vars.feature_table = tape.input(params.feature_table);
  return vars;
}

ad::TapeD::Var features_var(ad::TapeD& tape, const IntraRelationGraph& g,
                            const EncoderConfig& cfg, const ModelParams& params,
                            const ParamVars& vars, const WordVectors* vectors) {
  if (cfg.feature_mode == FeatureMode::RandomLearnable && vars.feature_table.valid()) {
    std::vector<int> idx;
    idx.reserve(g.nodes.size());
    bool all_in_vocab = true;
    for (const Node& n : g.nodes) {
      const int row = params.vocab_index(n.surface);
      if (row < 0) {
        all_in_vocab = false;
        break;
      }
      idx.push_back(row);
    }
    if (all_in_vocab) return tape.gather_rows(vars.feature_table, std::move(idx));
    // Out-of-vocabulary surfaces exist only when encoding a corpus the table
    // was not built on; fall back to constant features.
  }
  return tape.input(init_features(g, cfg, &params, vectors));
}

TapedEmbeddings encode_taped(ad::TapeD& tape, const GraphOperators& ops,
                             ad::TapeD::Var features, const ParamVars& vars,
                             const ForwardPlan& plan, const EncoderConfig& cfg) {
  using Var = ad::TapeD::Var;
  TapedEmbeddings out;

  Var h1 = tape.sigmoid(tape.add_row(tape.matmul(features, vars.mlp_w1), vars.mlp_b1));
  if (plan.mlp_mask.size() > 0) h1 = tape.cwise_mul_const(h1, plan.mlp_mask);
  out.anchor = tape.sigmoid(tape.add_row(tape.matmul(h1, vars.mlp_w2), vars.mlp_b2));

  auto gcn_layer = [&](Var h, Var w, const Eigen::MatrixXd& mask) {
    Var agg = tape.left_mul_const(ops.neighbor_mean, h);
    Var m = tape.scale_rows_const(tape.concat_cols(h, agg), ops.skeleton_scale);
    Var z = tape.matmul(tape.left_mul_const(ops.a_norm, m), w);
    Var y = tape.leaky_relu(z, cfg.leaky_slope);
    if (mask.size() > 0) y = tape.cwise_mul_const(y, mask);
    return y;
  };
  Var g1 = gcn_layer(features, vars.gcn_w1, plan.gcn_mask);
  out.structural = gcn_layer(g1, vars.gcn_w2, Eigen::MatrixXd());

  out.negatives.reserve(plan.negative_perms.size());
  for (const auto& perm : plan.negative_perms) {
    out.negatives.push_back(tape.gather_rows(out.anchor, perm));
  }

  const Var event_source = cfg.event_from_anchor ? out.anchor : out.structural;
  out.event = tape.col_mean(tape.gather_rows(event_source, ops.skeleton));
  return out;
}

}  // namespace segcl
