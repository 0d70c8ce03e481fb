#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <random>
#include <vector>

#include "segcl/loss.hpp"
#include "support/oracles.hpp"

using namespace segcl;

namespace {

Eigen::MatrixXd mat1x2(double a, double b) {
  Eigen::MatrixXd m(1, 2);
  m << a, b;
  return m;
}

Eigen::MatrixXd rand_mat(std::mt19937_64& rng, int rows, int cols, double lo = -1.0,
                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

EmbeddingSet random_set(std::mt19937_64& rng, int n, int d, int k) {
  EmbeddingSet set;
  set.anchor = rand_mat(rng, n, d);
  set.structural = rand_mat(rng, n, d);
  set.event = rand_mat(rng, 1, d).row(0);
  for (int i = 0; i < k; ++i) set.negatives.push_back(rand_mat(rng, n, d));
  return set;
}

TapedEmbeddings to_tape(ad::TapeD& tape, const EmbeddingSet& set) {
  TapedEmbeddings e;
  e.anchor = tape.input(set.anchor);
  e.structural = tape.input(set.structural);
  e.event = tape.input(Eigen::MatrixXd(set.event));
  for (const auto& n : set.negatives) e.negatives.push_back(tape.input(n));
  return e;
}

}  // namespace

TEST_CASE("dist2 worked values") {
  Eigen::RowVectorXd a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(dist2(a, b) == 25.0);
  CHECK(dist2(a, a) == 0.0);
  CHECK(dist2(b, a) == dist2(a, b));
  Eigen::RowVectorXd c(3);
  c << 1, 2, 3;
  CHECK_THROWS_AS(dist2(a, c), ShapeError);

  Eigen::MatrixXd m0 = mat1x2(0, 0);
  Eigen::MatrixXd m1 = mat1x2(3, 4);
  const Eigen::VectorXd rd = row_dist2(m0, m1);
  REQUIRE(rd.size() == 1);
  CHECK(rd(0) == 25.0);
}

TEST_CASE("triplet_loss scalar evaluations") {
  const Eigen::MatrixXd h = mat1x2(0, 0);
  std::vector<Eigen::MatrixXd> neg_far = {mat1x2(3, 4)};
  std::vector<Eigen::MatrixXd> neg_same = {mat1x2(0, 0)};

  // max(0, 0 - 25 + 0.5) = 0
  CHECK(triplet_loss(h, h, neg_far, 0.5) == 0.0);
  // max(0, 25 - 0 + 0) = 25
  CHECK(triplet_loss(h, mat1x2(3, 4), neg_same, 0.0) == 25.0);
  // H+ = H- and eta = 0: exact boundary
  CHECK(triplet_loss(h, mat1x2(3, 4), neg_far, 0.0) == 0.0);

  SUBCASE("rows are averaged") {
    Eigen::MatrixXd h2(2, 2), pos2(2, 2), neg2(2, 2);
    h2 << 0, 0, 0, 0;
    pos2 << 3, 4, 0, 0;  // row terms: 25, 0 with eta 0 and far negative row 0
    neg2 << 3, 4, 3, 4;
    // row 0: max(0, 25 - 25) = 0; row 1: max(0, 0 - 25) = 0
    std::vector<Eigen::MatrixXd> negs = {neg2};
    CHECK(triplet_loss(h2, pos2, negs, 0.0) == 0.0);
    // same with near negatives: row 0: 25, row 1: 0 -> mean 12.5
    Eigen::MatrixXd near(2, 2);
    near << 0, 0, 0, 0;
    std::vector<Eigen::MatrixXd> negs2 = {near};
    CHECK(triplet_loss(h2, pos2, negs2, 0.0) == 12.5);
  }
  SUBCASE("negatives are averaged over k") {
    std::vector<Eigen::MatrixXd> ks = {mat1x2(0, 0), mat1x2(3, 4)};
    // terms: max(0, 25 - 0) = 25 and max(0, 25 - 25) = 0 -> 12.5
    CHECK(triplet_loss(h, mat1x2(3, 4), ks, 0.0) == 12.5);
  }
  SUBCASE("broadcast positive row") {
    Eigen::MatrixXd h2(2, 2);
    h2 << 0, 0, 3, 4;
    Eigen::RowVectorXd ev(2);
    ev << 0, 0;
    std::vector<Eigen::MatrixXd> negs = {h2};  // d2- = 0 per row
    // row 0: max(0, 0 - 0) = 0; row 1: max(0, 25 - 0) = 25 -> 12.5
    CHECK(triplet_loss(h2, ev, negs, 0.0) == 12.5);
  }
  SUBCASE("no negatives is an error") {
    std::vector<Eigen::MatrixXd> none;
    CHECK_THROWS_AS(triplet_loss(h, h, none, 0.5), Error);
  }
}

TEST_CASE("upper_bound_loss scalar evaluations") {
  const Eigen::MatrixXd h = mat1x2(0, 0);
  std::vector<Eigen::MatrixXd> neg = {mat1x2(3, 4)};  // d2- = 25

  // t = 0 - (25 - 0.9 - 0.9) = -23.2
  CHECK(upper_bound_loss(h, h, neg, 0.9, 0.9, UpperBoundMode::Hinge) ==
        doctest::Approx(23.2).epsilon(1e-12));
  CHECK(upper_bound_loss(h, h, neg, 0.9, 0.9, UpperBoundMode::PaperLiteral) ==
        doctest::Approx(-23.2).epsilon(1e-12));

  // d2- <= d2+ + eta + theta -> t >= 0 -> clamp to 0 in both modes
  std::vector<Eigen::MatrixXd> near = {mat1x2(1, 0)};  // d2- = 1 <= 0 + 1.8
  CHECK(upper_bound_loss(h, h, near, 0.9, 0.9, UpperBoundMode::Hinge) == 0.0);
  CHECK(upper_bound_loss(h, h, near, 0.9, 0.9, UpperBoundMode::PaperLiteral) == 0.0);

  // theta -> infinity forces the clamp
  CHECK(upper_bound_loss(h, h, neg, 0.9, 1e9, UpperBoundMode::Hinge) == 0.0);
}

TEST_CASE("total_loss composes Eq. terms and honors ablations") {
  std::mt19937_64 rng(321);
  LossConfig cfg;
  cfg.k_negatives = 2;

  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int d = 1 + static_cast<int>(rng() % 6);
    const EmbeddingSet set = random_set(rng, n, d, cfg.k_negatives);
    cfg.eta = 0.1 * static_cast<double>(rng() % 10);
    cfg.theta = 0.1 * static_cast<double>(rng() % 10);
    cfg.w_e = 0.25 * static_cast<double>(rng() % 8);
    cfg.w_s = 0.25 * static_cast<double>(rng() % 8);

    const LossReport r = total_loss(set, cfg);
    CHECK(r.zeta_s >= 0.0);
    CHECK(r.zeta_e >= 0.0);
    CHECK(r.zeta_u >= 0.0);  // hinge mode
    CHECK(std::abs(r.zeta_total - (cfg.w_e * r.zeta_e + cfg.w_s * r.zeta_s + r.zeta_u)) <=
          1e-12);

    // expected terms from the standalone ops
    const double zs = triplet_loss(set.anchor, set.structural, set.negatives, cfg.eta);
    const double ze = triplet_loss(set.anchor, set.event, set.negatives, cfg.eta);
    const double zu = upper_bound_loss(set.anchor, set.structural, set.negatives, cfg.eta,
                                       cfg.theta, cfg.upper_bound_mode);
    CHECK(r.zeta_s == zs);
    CHECK(r.zeta_e == ze);
    CHECK(r.zeta_u == zu);
  }

  SUBCASE("ablations zero their term exactly") {
    const EmbeddingSet set = random_set(rng, 4, 3, 2);
    cfg = LossConfig{};
    cfg.k_negatives = 2;
    cfg.ablate_structure = true;
    LossReport r = total_loss(set, cfg);
    CHECK(r.zeta_s == 0.0);
    CHECK(r.zeta_total == cfg.w_e * r.zeta_e + r.zeta_u);

    cfg.ablate_structure = false;
    cfg.ablate_event = true;
    r = total_loss(set, cfg);
    CHECK(r.zeta_e == 0.0);

    cfg.ablate_event = false;
    cfg.ablate_upper_bound = true;
    r = total_loss(set, cfg);
    CHECK(r.zeta_u == 0.0);
    CHECK(r.zeta_total == cfg.w_e * r.zeta_e + cfg.w_s * r.zeta_s);
  }
}

TEST_CASE("margin satisfaction zeroes the total") {
  // d2+ = 0 everywhere, d2- = 1: -theta <= d2+ - d2- + eta <= 0 holds
  const int n = 3, d = 2;
  EmbeddingSet set;
  set.anchor = Eigen::MatrixXd::Zero(n, d);
  set.structural = Eigen::MatrixXd::Zero(n, d);
  set.event = Eigen::RowVectorXd::Zero(d);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(n, d);
  neg.col(0).setOnes();  // each row at squared distance 1
  set.negatives = {neg};

  LossConfig cfg;  // eta = theta = 0.9
  const LossReport r = total_loss(set, cfg);
  CHECK(r.zeta_s == 0.0);
  CHECK(r.zeta_e == 0.0);
  CHECK(r.zeta_u == 0.0);
  CHECK(r.zeta_total == 0.0);
}

TEST_CASE("loss is invariant under aligned row permutation") {
  std::mt19937_64 rng(11);
  LossConfig cfg;
  cfg.k_negatives = 2;
  for (int round = 0; round < 20; ++round) {
    const int n = 2 + static_cast<int>(rng() % 5);
    EmbeddingSet set = random_set(rng, n, 4, cfg.k_negatives);
    const LossReport base = total_loss(set, cfg);

    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    EmbeddingSet permuted = set;
    for (int i = 0; i < n; ++i) {
      const int src = perm[static_cast<std::size_t>(i)];
      permuted.anchor.row(i) = set.anchor.row(src);
      permuted.structural.row(i) = set.structural.row(src);
      for (std::size_t k = 0; k < set.negatives.size(); ++k) {
        permuted.negatives[k].row(i) = set.negatives[k].row(src);
      }
    }
    const LossReport moved = total_loss(permuted, cfg);
    CHECK(moved.zeta_total == doctest::Approx(base.zeta_total).epsilon(1e-12));
  }
}

TEST_CASE("plain and taped losses agree bitwise") {
  std::mt19937_64 rng(2718);
  for (int round = 0; round < 50; ++round) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int d = 1 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % 3);
    const EmbeddingSet set = random_set(rng, n, d, k);

    LossConfig cfg;
    cfg.k_negatives = k;
    cfg.eta = 0.9;
    cfg.theta = 0.9;
    cfg.w_e = 0.5;
    cfg.w_s = 2.0;
    if (round % 4 == 1) cfg.ablate_structure = true;
    if (round % 4 == 2) cfg.ablate_event = true;
    if (round % 4 == 3) cfg.upper_bound_mode = UpperBoundMode::PaperLiteral;

    const LossReport plain = total_loss(set, cfg);

    ad::TapeD tape;
    const TapedEmbeddings e = to_tape(tape, set);
    const TapedLoss taped = total_loss_taped(tape, e, cfg, 0.0);
    const LossReport from_tape = report_from_taped(tape, taped, cfg);

    CHECK(from_tape.zeta_s == plain.zeta_s);
    CHECK(from_tape.zeta_e == plain.zeta_e);
    CHECK(from_tape.zeta_u == plain.zeta_u);
    CHECK(from_tape.zeta_total == plain.zeta_total);
    CHECK(tape.value(taped.objective)(0, 0) == plain.zeta_total);  // reg 0
  }
}

TEST_CASE("objective adds the embedding penalty only") {
  std::mt19937_64 rng(5);
  const EmbeddingSet set = random_set(rng, 3, 4, 1);
  LossConfig cfg;

  ad::TapeD tape;
  const TapedEmbeddings e = to_tape(tape, set);
  const TapedLoss with_reg = total_loss_taped(tape, e, cfg, 1e-2);
  const LossReport r = report_from_taped(tape, with_reg, cfg);

  CHECK(tape.value(with_reg.objective)(0, 0) > tape.value(with_reg.total)(0, 0));
  CHECK(r.zeta_total == tape.value(with_reg.total)(0, 0));  // penalty excluded
}

TEST_CASE("taped gradients match finite differences through the loss") {
  std::mt19937_64 rng(99);
  LossConfig cfg;
  cfg.k_negatives = 2;
  const EmbeddingSet base = random_set(rng, 4, 3, cfg.k_negatives);

  const auto loss_at = [&](const Eigen::MatrixXd& anchor) {
    ad::TapeD tape;
    EmbeddingSet set = base;
    set.anchor = anchor;
    const TapedEmbeddings e = to_tape(tape, set);
    const TapedLoss t = total_loss_taped(tape, e, cfg, 1e-3);
    return tape.value(t.objective)(0, 0);
  };

  ad::TapeD tape;
  const TapedEmbeddings e = to_tape(tape, base);
  const TapedLoss t = total_loss_taped(tape, e, cfg, 1e-3);
  tape.backward(t.objective);
  const Eigen::MatrixXd got = tape.grad(e.anchor);
  const Eigen::MatrixXd want = oracle::fd_gradient(loss_at, base.anchor);
  CHECK((got - want).cwiseAbs().maxCoeff() <=
        1e-5 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST_CASE("term_grad_norms reports zero for ablated terms") {
  std::mt19937_64 rng(6);
  const EmbeddingSet set = random_set(rng, 3, 3, 1);
  LossConfig cfg;
  cfg.ablate_event = true;

  ad::TapeD tape;
  const TapedEmbeddings e = to_tape(tape, set);
  const TapedLoss t = total_loss_taped(tape, e, cfg, 0.0);
  const std::vector<ad::TapeD::Var> params = {e.anchor, e.structural};
  const Eigen::Vector3d norms = term_grad_norms(tape, t, params);
  CHECK(norms(1) == 0.0);  // event term ablated
  CHECK(norms(0) >= 0.0);
}

TEST_CASE("LossConfig validation") {
  LossConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.eta = -0.1;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
  cfg = LossConfig{};
  cfg.theta = -1.0;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
  cfg = LossConfig{};
  cfg.w_e = -0.5;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);
  cfg = LossConfig{};
  cfg.k_negatives = 0;
  CHECK_THROWS_AS(cfg.validate(), SchemaError);

  CHECK(upper_bound_mode_from_string("hinge") == UpperBoundMode::Hinge);
  CHECK(upper_bound_mode_from_string("paper-literal") == UpperBoundMode::PaperLiteral);
  CHECK_FALSE(upper_bound_mode_from_string("nope").has_value());
  CHECK(to_string(UpperBoundMode::Hinge) == "hinge");
}
