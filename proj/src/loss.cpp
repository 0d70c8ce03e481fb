#include "segcl/loss.hpp"

#include <cmath>

namespace segcl {

std::optional<UpperBoundMode> upper_bound_mode_from_string(std::string_view s) {
  if (s == "hinge") return UpperBoundMode::Hinge;
  if (s == "paper-literal") return UpperBoundMode::PaperLiteral;
  return std::nullopt;
}

std::string_view to_string(UpperBoundMode m) {
  return m == UpperBoundMode::Hinge ? "hinge" : "paper-literal";
}

void LossConfig::validate() const {
  if (eta < 0.0) throw SchemaError("eta must be a non-negative number");
  if (theta < 0.0) throw SchemaError("theta must be a non-negative number");
  if (w_e < 0.0) throw SchemaError("W_e must be >= 0");
  if (w_s < 0.0) throw SchemaError("W_s must be >= 0");
  if (k_negatives < 1) throw SchemaError("k_negatives must be >= 1");
}

Eigen::VectorXd row_dist2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("row_dist2: shape mismatch");
  }
  return (a - b).rowwise().squaredNorm();
}

namespace {

void check_negatives(const Eigen::MatrixXd& h,
                     std::span<const Eigen::MatrixXd> negatives) {
  if (negatives.empty()) throw Error("loss: no negatives (k = 0)");
  for (const Eigen::MatrixXd& n : negatives) {
    if (n.rows() != h.rows() || n.cols() != h.cols()) {
      throw ShapeError("loss: negative shape does not match anchor");
    }
  }
}

double triplet_from_dp(const Eigen::MatrixXd& h, const Eigen::VectorXd& dp,
                       std::span<const Eigen::MatrixXd> negatives, double eta) {
  // Reciprocal scaling and a single margin constant keep this bitwise equal
  // to the taped mirror, which composes scale() and add_scalar() nodes.
  double acc = 0.0;
  for (const Eigen::MatrixXd& neg : negatives) {
    const Eigen::VectorXd dn = row_dist2(h, neg);
    acc += ((dp - dn).array() + eta).max(0.0).mean();
  }
  return acc * (1.0 / static_cast<double>(negatives.size()));
}

}  // namespace

double triplet_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& pos,
                    std::span<const Eigen::MatrixXd> negatives, double eta) {
  check_negatives(h, negatives);
  return triplet_from_dp(h, row_dist2(h, pos), negatives, eta);
}

double triplet_loss(const Eigen::MatrixXd& h, const Eigen::RowVectorXd& pos,
                    std::span<const Eigen::MatrixXd> negatives, double eta) {
  check_negatives(h, negatives);
  if (pos.cols() != h.cols()) throw ShapeError("triplet_loss: positive width mismatch");
  // Materialized so the reduction order matches the taped sub_row path.
  const Eigen::MatrixXd shifted = h.rowwise() - pos;
  return triplet_from_dp(h, shifted.rowwise().squaredNorm(), negatives, eta);
}

double upper_bound_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& pos,
                        std::span<const Eigen::MatrixXd> negatives, double eta,
                        double theta, UpperBoundMode mode) {
  check_negatives(h, negatives);
  const Eigen::VectorXd dp = row_dist2(h, pos);
  const double margin = eta + theta;
  double acc = 0.0;
  for (const Eigen::MatrixXd& neg : negatives) {
    const Eigen::VectorXd dn = row_dist2(h, neg);
    const Eigen::ArrayXd t = (dp - dn).array() + margin;
    if (mode == UpperBoundMode::Hinge) {
      acc += (-t).max(0.0).mean();
    } else {
      acc += t.min(0.0).mean();
    }
  }
  return acc * (1.0 / static_cast<double>(negatives.size()));
}

LossReport total_loss(const EmbeddingSet& set, const LossConfig& cfg) {
  cfg.validate();
  LossReport r;
  if (!cfg.ablate_structure) {
    r.zeta_s = triplet_loss(set.anchor, set.structural,
                            std::span<const Eigen::MatrixXd>(set.negatives), cfg.eta);
  }
  if (!cfg.ablate_event) {
    r.zeta_e = triplet_loss(set.anchor, set.event,
                            std::span<const Eigen::MatrixXd>(set.negatives), cfg.eta);
  }
  if (!cfg.ablate_upper_bound) {
    r.zeta_u = upper_bound_loss(set.anchor, set.structural,
                                std::span<const Eigen::MatrixXd>(set.negatives), cfg.eta,
                                cfg.theta, cfg.upper_bound_mode);
  }
  r.zeta_total = cfg.w_e * r.zeta_e + cfg.w_s * r.zeta_s + r.zeta_u;
  return r;
}

TapedLoss total_loss_taped(ad::TapeD& tape, const TapedEmbeddings& embeds,
                           const LossConfig& cfg, double reg_factor) {
  cfg.validate();
  if (embeds.negatives.empty()) throw Error("loss: no negatives (k = 0)");
  using Var = ad::TapeD::Var;
  const double inv_k = 1.0 / static_cast<double>(embeds.negatives.size());

  const Var dp_s = tape.row_sum(tape.square(tape.sub(embeds.anchor, embeds.structural)));
  std::vector<Var> dns;
  dns.reserve(embeds.negatives.size());
  for (const Var& neg : embeds.negatives) {
    dns.push_back(tape.row_sum(tape.square(tape.sub(embeds.anchor, neg))));
  }

  auto sum_terms = [&](auto&& term) {
    Var acc = term(dns[0]);
    for (std::size_t i = 1; i < dns.size(); ++i) acc = tape.add(acc, term(dns[i]));
    return acc;
  };

  TapedLoss loss;
  if (!cfg.ablate_structure) {
    loss.zeta_s = tape.scale(sum_terms([&](Var dn) {
      return tape.mean_all(tape.relu(tape.add_scalar(tape.sub(dp_s, dn), cfg.eta)));
    }), inv_k);
  }
  if (!cfg.ablate_event) {
    const Var dp_e =
        tape.row_sum(tape.square(tape.sub_row(embeds.anchor, embeds.event)));
    loss.zeta_e = tape.scale(sum_terms([&](Var dn) {
      return tape.mean_all(tape.relu(tape.add_scalar(tape.sub(dp_e, dn), cfg.eta)));
    }), inv_k);
  }
  if (!cfg.ablate_upper_bound) {
    const double margin = cfg.eta + cfg.theta;
    if (cfg.upper_bound_mode == UpperBoundMode::Hinge) {
      loss.zeta_u = tape.scale(sum_terms([&](Var dn) {
        return tape.mean_all(tape.relu(tape.add_scalar(tape.sub(dn, dp_s), -margin)));
      }), inv_k);
    } else {
      loss.zeta_u = tape.scale(sum_terms([&](Var dn) {
        return tape.mean_all(
            tape.relu(tape.scale(tape.add_scalar(tape.sub(dp_s, dn), margin), -1.0)));
      }), -inv_k);
    }
  }

  auto zero_var = [&] { return tape.input(Eigen::MatrixXd::Zero(1, 1)); };
  const Var ze = loss.zeta_e.valid() ? loss.zeta_e : zero_var();
  const Var zs = loss.zeta_s.valid() ? loss.zeta_s : zero_var();
  const Var zu = loss.zeta_u.valid() ? loss.zeta_u : zero_var();
  loss.total =
      tape.add(tape.add(tape.scale(ze, cfg.w_e), tape.scale(zs, cfg.w_s)), zu);

  if (reg_factor != 0.0) {
    const Var penalty = tape.add(tape.mean_all(tape.square(embeds.anchor)),
                                 tape.mean_all(tape.square(embeds.structural)));
    loss.objective = tape.add(loss.total, tape.scale(penalty, reg_factor));
  } else {
    loss.objective = loss.total;
  }
  return loss;
}

LossReport report_from_taped(const ad::TapeD& tape, const TapedLoss& loss,
                             const LossConfig& cfg) {
  LossReport r;
  r.zeta_s = loss.zeta_s.valid() ? tape.value(loss.zeta_s)(0, 0) : 0.0;
  r.zeta_e = loss.zeta_e.valid() ? tape.value(loss.zeta_e)(0, 0) : 0.0;
  r.zeta_u = loss.zeta_u.valid() ? tape.value(loss.zeta_u)(0, 0) : 0.0;
  r.zeta_total = cfg.w_e * r.zeta_e + cfg.w_s * r.zeta_s + r.zeta_u;
  return r;
}

Eigen::Vector3d term_grad_norms(ad::TapeD& tape, const TapedLoss& loss,
                                std::span<const ad::TapeD::Var> params) {
  Eigen::Vector3d norms = Eigen::Vector3d::Zero();
  const ad::TapeD::Var terms[3] = {loss.zeta_s, loss.zeta_e, loss.zeta_u};
  for (int t = 0; t < 3; ++t) {
    if (!terms[t].valid()) continue;
    tape.backward(terms[t]);
    double sq = 0.0;
    for (const auto& p : params) {
      if (p.valid()) sq += tape.grad(p).squaredNorm();
    }
    norms(t) = std::sqrt(sq);
  }
  return norms;
}

}  // namespace segcl
