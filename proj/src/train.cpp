#include "segcl/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "segcl/core.hpp"
#include "segcl/threads.hpp"

namespace segcl {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw SchemaError("learning_rate must be >= 0");
  if (weight_decay < 0.0) throw SchemaError("weight_decay must be >= 0");
  if (reg_factor < 0.0) throw SchemaError("reg_factor must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw SchemaError("dropout must be in [0, 1)");
  if (max_epochs < 1) throw SchemaError("max_epochs must be >= 1");
  if (batch_size < 1) throw SchemaError("batch_size must be >= 1");
  if (convergence_window < 1) throw SchemaError("convergence_window must be >= 1");
  if (convergence_tol <= 0.0) throw SchemaError("convergence_tol must be > 0");
}

namespace {

struct TrainableRef {
  const char* name;
  Eigen::MatrixXd* value;
};

std::vector<TrainableRef> trainables(ModelParams& p) {
  std::vector<TrainableRef> list = {
      {"mlp_w1", &p.mlp_w1}, {"mlp_b1", &p.mlp_b1}, {"mlp_w2", &p.mlp_w2},
      {"mlp_b2", &p.mlp_b2}, {"gcn_w1", &p.gcn_w1}, {"gcn_w2", &p.gcn_w2},
  };
  if (p.feature_table.rows() > 0) list.push_back({"feature_table", &p.feature_table});
  return list;
}

std::vector<ad::TapeD::Var> var_list(const ParamVars& vars) {
  std::vector<ad::TapeD::Var> list = {vars.mlp_w1, vars.mlp_b1, vars.mlp_w2,
                                      vars.mlp_b2, vars.gcn_w1, vars.gcn_w2};
  if (vars.feature_table.valid()) list.push_back(vars.feature_table);
  return list;
}

struct GraphWork {
  const IntraRelationGraph* graph = nullptr;
  GraphOperators ops;
  Eigen::MatrixXd const_features;  // empty in random-learnable mode
  int stable_index = 0;            // keys the per-graph random streams
};

struct GraphResult {
  std::vector<Eigen::MatrixXd> grads;
  LossReport report;
  Eigen::Vector3d term_norms = Eigen::Vector3d::Zero();
  bool has_term_norms = false;
};

}  // namespace

TrainResult train(std::span<const IntraRelationGraph> graphs, const EncoderConfig& enc,
                  const LossConfig& loss_cfg, const TrainConfig& cfg) {
  enc.validate();
  loss_cfg.validate();
  cfg.validate();

  TrainResult result;
  result.params = init_params(enc, cfg.seed, graphs);

  std::unique_ptr<WordVectors> vectors;
  if (enc.feature_mode == FeatureMode::Pretrained) {
    vectors = std::make_unique<WordVectors>(WordVectors::load(enc.pretrained_vectors));
  }

  std::vector<GraphWork> work;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const IntraRelationGraph& g = graphs[i];
    if (g.node_count() < 2) {
      ++result.skipped_graphs;
      continue;
    }
    GraphWork w;
    w.graph = &g;
    w.ops = graph_operators(g, enc.rho);
    w.stable_index = static_cast<int>(i);
    if (enc.feature_mode != FeatureMode::RandomLearnable) {
      w.const_features = init_features(g, enc, &result.params, vectors.get());
    }
    work.push_back(std::move(w));
  }
  if (work.empty()) throw SchemaError("train: no graphs with at least 2 nodes");

  auto params_list = trainables(result.params);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order(work.size());
    std::iota(order.begin(), order.end(), 0);
    auto order_rng = make_rng(cfg.seed, rng_stream::kBatchOrder, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), order_rng);

    LossReport epoch_report;
    Eigen::Vector3d epoch_norms = Eigen::Vector3d::Zero();
    bool have_norms = false;
    std::size_t processed = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t batch_n = end - start;
      std::vector<GraphResult> results(batch_n);

      parallel_for(batch_n, cfg.threads, [&](std::size_t j) {
        const GraphWork& w = work[order[start + j]];
        const IntraRelationGraph& g = *w.graph;

        ad::TapeD tape;
        const ParamVars vars = register_params(tape, result.params);
        const auto vlist = var_list(vars);

        ad::TapeD::Var features;
        if (enc.feature_mode == FeatureMode::RandomLearnable) {
          features = features_var(tape, g, enc, result.params, vars, vectors.get());
        } else {
          features = tape.input(w.const_features);
        }

        auto neg_rng = make_rng(cfg.seed, rng_stream::kNegatives,
                                static_cast<std::uint64_t>(epoch),
                                static_cast<std::uint64_t>(w.stable_index));
        auto drop_rng = make_rng(cfg.seed, rng_stream::kDropout,
                                 static_cast<std::uint64_t>(epoch),
                                 static_cast<std::uint64_t>(w.stable_index));
        const ForwardPlan plan =
            make_forward_plan(g.node_count(), enc.hidden, loss_cfg.k_negatives,
                              cfg.dropout, neg_rng, drop_rng);

        const TapedEmbeddings embeds = encode_taped(tape, w.ops, features, vars, plan, enc);
        const TapedLoss loss = total_loss_taped(tape, embeds, loss_cfg, cfg.reg_factor);

        GraphResult& res = results[j];
        res.report = report_from_taped(tape, loss, loss_cfg);
        if (!std::isfinite(res.report.zeta_total)) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                             ": zeta_total is not finite on doc " + g.doc_id);
        }

        tape.backward(loss.objective);
        res.grads.reserve(vlist.size());
        for (std::size_t k = 0; k < vlist.size(); ++k) {
          const Eigen::MatrixXd& grad = tape.grad(vlist[k]);
          if (!grad.allFinite()) {
            throw NumericError(std::string("non-finite gradient for ") +
                               params_list[k].name + " on doc " + g.doc_id +
                               " at epoch " + std::to_string(epoch));
          }
          res.grads.push_back(grad);
        }

        if (start == 0 && j == 0) {
          res.term_norms = term_grad_norms(tape, loss, vlist);
          res.has_term_norms = true;
        }
      });

      std::vector<Eigen::MatrixXd> grad_sum;
      grad_sum.reserve(params_list.size());
      for (std::size_t k = 0; k < params_list.size(); ++k) {
        grad_sum.push_back(Eigen::MatrixXd::Zero(params_list[k].value->rows(),
                                                 params_list[k].value->cols()));
      }
      for (std::size_t j = 0; j < batch_n; ++j) {
        for (std::size_t k = 0; k < grad_sum.size(); ++k) grad_sum[k] += results[j].grads[k];
        epoch_report.zeta_s += results[j].report.zeta_s;
        epoch_report.zeta_e += results[j].report.zeta_e;
        epoch_report.zeta_u += results[j].report.zeta_u;
        epoch_report.zeta_total += results[j].report.zeta_total;
        if (results[j].has_term_norms) {
          epoch_norms = results[j].term_norms;
          have_norms = true;
        }
      }
      processed += batch_n;

      const double inv_batch = 1.0 / static_cast<double>(batch_n);
      for (std::size_t k = 0; k < params_list.size(); ++k) {
        Eigen::MatrixXd& p = *params_list[k].value;
        p -= cfg.learning_rate * (grad_sum[k] * inv_batch + cfg.weight_decay * p);
      }
    }

    const double inv_n = 1.0 / static_cast<double>(processed);
    EpochRecord record;
    record.epoch = epoch;
    record.report.zeta_s = epoch_report.zeta_s * inv_n;
    record.report.zeta_e = epoch_report.zeta_e * inv_n;
    record.report.zeta_u = epoch_report.zeta_u * inv_n;
    record.report.zeta_total = epoch_report.zeta_total * inv_n;
    if (have_norms) record.report.term_grad_norms = epoch_norms;
    result.history.push_back(record);

    if (epoch >= cfg.convergence_window) {
      const double now = result.history[static_cast<std::size_t>(epoch)].report.zeta_total;
      const double then =
          result.history[static_cast<std::size_t>(epoch - cfg.convergence_window)].report.zeta_total;
      const double rel = std::abs(now - then) / std::max(std::abs(then), 1e-12);
      if (rel < cfg.convergence_tol) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

void save_history_csv(const std::string& path, std::span<const EpochRecord> history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open history file for writing: " + path);
  out << "epoch,zeta_s,zeta_e,zeta_u,zeta_total\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << "," << format_double(r.report.zeta_s) << ","
        << format_double(r.report.zeta_e) << "," << format_double(r.report.zeta_u) << ","
        << format_double(r.report.zeta_total) << "\n";
  }
  if (!out) throw IoError("failed writing history file: " + path);
}

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data") ||
      !j.at("rows").is_number_integer() || !j.at("cols").is_number_integer() ||
      !j.at("data").is_array()) {
    throw SchemaError(where + ": matrix entries need rows, cols, data");
  }
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw SchemaError(where + ": matrix data length does not match rows*cols");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!data[i].is_number()) throw SchemaError(where + ": matrix data must be numeric");
      m(r, c) = data[i].get<double>();
      ++i;
    }
  }
  return m;
}

json encoder_to_json(const EncoderConfig& e) {
  json j;
  j["d0"] = e.d0;
  j["hidden"] = e.hidden;
  j["out"] = e.out;
  j["feature_mode"] = std::string(to_string(e.feature_mode));
  j["pretrained_vectors"] = e.pretrained_vectors;
  j["rho"] = e.rho;
  j["leaky_slope"] = e.leaky_slope;
  j["event_from_anchor"] = e.event_from_anchor;
  j["readout_structural"] = e.readout_structural;
  return j;
}

json loss_to_json(const LossConfig& l) {
  json j;
  j["eta"] = l.eta;
  j["theta"] = l.theta;
  j["w_e"] = l.w_e;
  j["w_s"] = l.w_s;
  j["k_negatives"] = l.k_negatives;
  j["upper_bound_mode"] = std::string(to_string(l.upper_bound_mode));
  j["ablate_structure"] = l.ablate_structure;
  j["ablate_event"] = l.ablate_event;
  j["ablate_upper_bound"] = l.ablate_upper_bound;
  return j;
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["learning_rate"] = t.learning_rate;
  j["weight_decay"] = t.weight_decay;
  j["reg_factor"] = t.reg_factor;
  j["dropout"] = t.dropout;
  j["max_epochs"] = t.max_epochs;
  j["batch_size"] = t.batch_size;
  j["seed"] = t.seed;
  j["threads"] = t.threads;
  j["convergence_window"] = t.convergence_window;
  j["convergence_tol"] = t.convergence_tol;
  return j;
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + ": missing field " + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field " + key + " has the wrong type");
  }
}

EncoderConfig encoder_from_json(const json& j, const std::string& where) {
  EncoderConfig e;
  e.d0 = get_field<int>(j, "d0", where);
  e.hidden = get_field<int>(j, "hidden", where);
  e.out = get_field<int>(j, "out", where);
  const auto mode = feature_mode_from_string(get_field<std::string>(j, "feature_mode", where));
  if (!mode) throw SchemaError(where + ": unknown feature_mode");
  e.feature_mode = *mode;
  e.pretrained_vectors = get_field<std::string>(j, "pretrained_vectors", where);
  e.rho = get_field<double>(j, "rho", where);
  e.leaky_slope = get_field<double>(j, "leaky_slope", where);
  e.event_from_anchor = get_field<bool>(j, "event_from_anchor", where);
  e.readout_structural = get_field<bool>(j, "readout_structural", where);
  return e;
}

LossConfig loss_from_json(const json& j, const std::string& where) {
  LossConfig l;
  l.eta = get_field<double>(j, "eta", where);
  l.theta = get_field<double>(j, "theta", where);
  l.w_e = get_field<double>(j, "w_e", where);
  l.w_s = get_field<double>(j, "w_s", where);
  l.k_negatives = get_field<int>(j, "k_negatives", where);
  const auto mode =
      upper_bound_mode_from_string(get_field<std::string>(j, "upper_bound_mode", where));
  if (!mode) throw SchemaError(where + ": unknown upper_bound_mode");
  l.upper_bound_mode = *mode;
  l.ablate_structure = get_field<bool>(j, "ablate_structure", where);
  l.ablate_event = get_field<bool>(j, "ablate_event", where);
  l.ablate_upper_bound = get_field<bool>(j, "ablate_upper_bound", where);
  return l;
}

TrainConfig train_from_json(const json& j, const std::string& where) {
  TrainConfig t;
  t.learning_rate = get_field<double>(j, "learning_rate", where);
  t.weight_decay = get_field<double>(j, "weight_decay", where);
  t.reg_factor = get_field<double>(j, "reg_factor", where);
  t.dropout = get_field<double>(j, "dropout", where);
  t.max_epochs = get_field<int>(j, "max_epochs", where);
  t.batch_size = get_field<int>(j, "batch_size", where);
  t.seed = get_field<std::uint64_t>(j, "seed", where);
  t.threads = get_field<int>(j, "threads", where);
  t.convergence_window = get_field<int>(j, "convergence_window", where);
  t.convergence_tol = get_field<double>(j, "convergence_tol", where);
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const EncoderConfig& enc, const LossConfig& loss_cfg,
                     const TrainConfig& train_cfg) {
  json root;
  root["version"] = kCheckpointFormatVersion;
  root["encoder"] = encoder_to_json(enc);
  root["loss"] = loss_to_json(loss_cfg);
  root["train"] = train_to_json(train_cfg);
  json p;
  p["mlp_w1"] = matrix_to_json(params.mlp_w1);
  p["mlp_b1"] = matrix_to_json(params.mlp_b1);
  p["mlp_w2"] = matrix_to_json(params.mlp_w2);
  p["mlp_b2"] = matrix_to_json(params.mlp_b2);
  p["gcn_w1"] = matrix_to_json(params.gcn_w1);
  p["gcn_w2"] = matrix_to_json(params.gcn_w2);
  p["feature_table"] = matrix_to_json(params.feature_table);
  root["params"] = std::move(p);
  root["feature_vocab"] = params.feature_vocab;

  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  const std::string where = "checkpoint " + path;
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw SchemaError(where + ": invalid JSON: " + e.what());
  }
  if (!root.is_object() || !root.contains("version") ||
      !root.at("version").is_number_integer()) {
    throw SchemaError(where + ": missing integer field version");
  }
  if (root.at("version").get<int>() != kCheckpointFormatVersion) {
    throw SchemaError(where + ": unsupported version " +
                      std::to_string(root.at("version").get<int>()) + "; expected " +
                      std::to_string(kCheckpointFormatVersion));
  }
  for (const char* key : {"encoder", "loss", "train", "params", "feature_vocab"}) {
    if (!root.contains(key)) throw SchemaError(where + ": missing field " + key);
  }

  Checkpoint ck;
  ck.encoder = encoder_from_json(root.at("encoder"), where);
  ck.loss = loss_from_json(root.at("loss"), where);
  ck.train = train_from_json(root.at("train"), where);
  const json& p = root.at("params");
  ck.params.mlp_w1 = matrix_from_json(p.at("mlp_w1"), where);
  ck.params.mlp_b1 = matrix_from_json(p.at("mlp_b1"), where);
  ck.params.mlp_w2 = matrix_from_json(p.at("mlp_w2"), where);
  ck.params.mlp_b2 = matrix_from_json(p.at("mlp_b2"), where);
  ck.params.gcn_w1 = matrix_from_json(p.at("gcn_w1"), where);
  ck.params.gcn_w2 = matrix_from_json(p.at("gcn_w2"), where);
  ck.params.feature_table = matrix_from_json(p.at("feature_table"), where);
  if (!root.at("feature_vocab").is_array()) {
    throw SchemaError(where + ": feature_vocab must be an array");
  }
  for (const json& s : root.at("feature_vocab")) {
    if (!s.is_string()) throw SchemaError(where + ": feature_vocab entries must be strings");
    ck.params.feature_vocab.push_back(s.get<std::string>());
  }
  if (static_cast<Eigen::Index>(ck.params.feature_vocab.size()) !=
      ck.params.feature_table.rows()) {
    throw SchemaError(where + ": feature_vocab size does not match feature_table rows");
  }
  return ck;
}

}  // namespace segcl
