#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segcl/ad.hpp"
#include "segcl/core.hpp"
#include "segcl/encoder.hpp"

namespace segcl {

enum class UpperBoundMode { Hinge, PaperLiteral };

std::optional<UpperBoundMode> upper_bound_mode_from_string(std::string_view s);
std::string_view to_string(UpperBoundMode m);

struct LossConfig {
  double eta = 0.9;
  double theta = 0.9;
  double w_e = 1.0;
  double w_s = 1.0;
  int k_negatives = 1;
  UpperBoundMode upper_bound_mode = UpperBoundMode::Hinge;
  bool ablate_structure = false;
  bool ablate_event = false;
  bool ablate_upper_bound = false;

  void validate() const;
};

struct LossReport {
  double zeta_s = 0.0;
  double zeta_e = 0.0;
  double zeta_u = 0.0;
  double zeta_total = 0.0;
  Eigen::Vector3d term_grad_norms = Eigen::Vector3d::Zero();  // (s, e, u)
};

/// Squared Euclidean distance.
template <typename A, typename B>
double dist2(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("dist2: dimension mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
  return (a.derived() - b.derived()).squaredNorm();
}

/// Per-row squared distances between two n x d matrices.
Eigen::VectorXd row_dist2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// (1/k) sum_i mean_rows max(0, d2(H, pos) - d2(H, neg_i) + eta).
double triplet_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& pos,
                    std::span<const Eigen::MatrixXd> negatives, double eta);

/// Broadcast positive: one row compared against every anchor row.
double triplet_loss(const Eigen::MatrixXd& h, const Eigen::RowVectorXd& pos,
                    std::span<const Eigen::MatrixXd> negatives, double eta);

/// Literal term t_i = d2(H, pos) - (d2(H, neg_i) - eta - theta).
/// Hinge mode: (1/k) sum mean max(0, -t_i). Paper-literal: (1/k) sum mean min(t_i, 0).
double upper_bound_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& pos,
                        std::span<const Eigen::MatrixXd> negatives, double eta,
                        double theta, UpperBoundMode mode);

/// zeta_total = W_e * zeta_e + W_s * zeta_s + zeta_u, with ablated terms
/// exactly zero. The upper-bound term shares the structural positive.
LossReport total_loss(const EmbeddingSet& set, const LossConfig& cfg);

struct TapedLoss {
  ad::TapeD::Var zeta_s;  // invalid when ablated
  ad::TapeD::Var zeta_e;
  ad::TapeD::Var zeta_u;
  ad::TapeD::Var total;
  ad::TapeD::Var objective;  // total + reg_factor * embedding L2 penalty
};

TapedLoss total_loss_taped(ad::TapeD& tape, const TapedEmbeddings& embeds,
                           const LossConfig& cfg, double reg_factor);

LossReport report_from_taped(const ad::TapeD& tape, const TapedLoss& loss,
                             const LossConfig& cfg);

/// Norm of the gradient of each loss term over the given parameter list,
/// one backward sweep per term. Leaves the tape's gradients clobbered.
Eigen::Vector3d term_grad_norms(ad::TapeD& tape, const TapedLoss& loss,
                                std::span<const ad::TapeD::Var> params);

}  // namespace segcl
