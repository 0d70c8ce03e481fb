#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace segcl {

struct ProbeConfig {
  double train_fraction = 0.7;
  double probe_lr = 0.5;
  int probe_epochs = 300;
  int repeats = 10;
  std::vector<std::uint64_t> seeds;  // optional; derived from the base seed when empty
  bool micro_f1 = false;             // report micro instead of macro F1

  void validate() const;
};

/// Sorted unique labels; class index = position in this list.
std::vector<std::string> class_labels(std::span<const std::string> labels);
std::vector<int> encode_labels(std::span<const std::string> labels,
                               const std::vector<std::string>& classes);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Stratified by class with largest-remainder rounding toward
/// round(n * train_fraction); every class keeps at least one document on
/// each side. Classes with fewer than 2 documents are an error.
Split stratified_split(std::span<const int> y, int num_classes, double train_fraction,
                       std::uint64_t seed);

/// Softmax regression fit by full-batch gradient descent on cross-entropy.
/// Returns (d+1) x C weights; the last row is the bias. Zero-initialized, so
/// zero epochs yield uniform predicted probabilities.
Eigen::MatrixXd train_probe(const Eigen::MatrixXd& x, std::span<const int> y,
                            int num_classes, const ProbeConfig& cfg);

/// Argmax class per row; ties resolve to the lowest class index.
std::vector<int> predict(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& x);

struct ClassMetrics {
  std::string label;
  int support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  double precision = 0.0;  // micro accuracy over the test set
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

MetricsReport evaluate(std::span<const int> predicted, std::span<const int> actual,
                       const std::vector<std::string>& classes);

struct ProbeAggregate {
  std::vector<std::uint64_t> run_seeds;
  std::vector<MetricsReport> runs;
  MetricsReport mean;  // per_class averaged entrywise; support averaged too
  MetricsReport best;  // run with the highest precision (first on ties)
};

/// Full protocol: `repeats` split/fit/evaluate rounds, run in parallel.
ProbeAggregate run_probe(const Eigen::MatrixXd& x, std::span<const std::string> labels,
                         const ProbeConfig& cfg, std::uint64_t seed, int threads = 1);

std::string format_metrics_csv(const ProbeAggregate& agg, bool micro_f1);
std::string format_metrics_table(const ProbeAggregate& agg, bool micro_f1);

}  // namespace segcl
