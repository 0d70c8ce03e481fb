#include "segcl/probe.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "segcl/core.hpp"
#include "segcl/threads.hpp"

namespace segcl {

void ProbeConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw SchemaError("train_fraction must be in (0, 1)");
  }
  if (probe_lr < 0.0) throw SchemaError("probe_lr must be >= 0");
  if (probe_epochs < 0) throw SchemaError("probe_epochs must be >= 0");
  if (repeats < 1) throw SchemaError("repeats must be >= 1");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != repeats) {
    throw SchemaError("seeds list must be empty or have exactly `repeats` entries");
  }
}

std::vector<std::string> class_labels(std::span<const std::string> labels) {
  std::set<std::string> uniq(labels.begin(), labels.end());
  return {uniq.begin(), uniq.end()};
}

std::vector<int> encode_labels(std::span<const std::string> labels,
                               const std::vector<std::string>& classes) {
  std::vector<int> y;
  y.reserve(labels.size());
  for (const std::string& l : labels) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), l);
    if (it == classes.end() || *it != l) throw SchemaError("label not in class list: " + l);
    y.push_back(static_cast<int>(it - classes.begin()));
  }
  return y;
}

Split stratified_split(std::span<const int> y, int num_classes, double train_fraction,
                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw SchemaError("train_fraction must be in (0, 1)");
  }
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= num_classes) throw SchemaError("class index out of range");
    by_class[static_cast<std::size_t>(y[i])].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < num_classes; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 2) {
      throw SchemaError("class " + std::to_string(c) +
                        " has fewer than 2 documents; cannot split");
    }
  }

  const auto target_total =
      static_cast<long>(std::llround(static_cast<double>(y.size()) * train_fraction));
  std::vector<long> take(static_cast<std::size_t>(num_classes));
  std::vector<std::pair<double, int>> remainders;
  long base_total = 0;
  for (int c = 0; c < num_classes; ++c) {
    const double raw =
        static_cast<double>(by_class[static_cast<std::size_t>(c)].size()) * train_fraction;
    take[static_cast<std::size_t>(c)] = static_cast<long>(std::floor(raw));
    base_total += take[static_cast<std::size_t>(c)];
    remainders.emplace_back(raw - std::floor(raw), c);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long d = 0; d < target_total - base_total; ++d) {
    take[static_cast<std::size_t>(remainders[static_cast<std::size_t>(d)].second)] += 1;
  }
  for (int c = 0; c < num_classes; ++c) {
    const auto n_c = static_cast<long>(by_class[static_cast<std::size_t>(c)].size());
    take[static_cast<std::size_t>(c)] = std::clamp(take[static_cast<std::size_t>(c)], 1L, n_c - 1);
  }

  Split split;
  for (int c = 0; c < num_classes; ++c) {
    auto& ids = by_class[static_cast<std::size_t>(c)];
    auto rng = make_rng(seed, rng_stream::kProbeSplit, static_cast<std::uint64_t>(c));
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto k = static_cast<std::size_t>(take[static_cast<std::size_t>(c)]);
    split.train.insert(split.train.end(), ids.begin(), ids.begin() + static_cast<long>(k));
    split.test.insert(split.test.end(), ids.begin() + static_cast<long>(k), ids.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

Eigen::MatrixXd augment_ones(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xa(x.rows(), x.cols() + 1);
  xa.leftCols(x.cols()) = x;
  xa.col(x.cols()).setOnes();
  return xa;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
  }
  p = p.array().exp();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

}  // namespace

Eigen::MatrixXd train_probe(const Eigen::MatrixXd& x, std::span<const int> y,
                            int num_classes, const ProbeConfig& cfg) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ShapeError("train_probe: embeddings and labels disagree on row count");
  }
  if (x.rows() == 0) throw SchemaError("train_probe: empty training set");
  if (std::set<int>(y.begin(), y.end()).size() < 2) {
    throw SchemaError("train_probe: training labels must span at least 2 classes");
  }

  const Eigen::MatrixXd xa = augment_ones(x);
  const auto n = static_cast<double>(xa.rows());
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(xa.rows(), num_classes);
  for (Eigen::Index i = 0; i < xa.rows(); ++i) {
    onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(xa.cols(), num_classes);
  for (int epoch = 0; epoch < cfg.probe_epochs; ++epoch) {
    const Eigen::MatrixXd probs = row_softmax(xa * w);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < xa.rows(); ++i) {
      loss -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
    }
    loss /= n;
    if (!std::isfinite(loss)) {
      throw NumericError("probe loss became non-finite at epoch " + std::to_string(epoch));
    }
    w -= cfg.probe_lr * (xa.transpose() * (probs - onehot)) / n;
  }
  return w;
}

std::vector<int> predict(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& x) {
  if (weights.rows() != x.cols() + 1) {
    throw ShapeError("predict: weight rows must equal embedding dim + 1");
  }
  const Eigen::MatrixXd scores = augment_ones(x) * weights;
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int arg = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, arg)) arg = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = arg;
  }
  return out;
}

MetricsReport evaluate(std::span<const int> predicted, std::span<const int> actual,
                       const std::vector<std::string>& classes) {
  if (actual.empty()) throw SchemaError("evaluate: empty test set");
  if (predicted.size() != actual.size()) {
    throw ShapeError("evaluate: prediction and label counts differ");
  }
  const int num_classes = static_cast<int>(classes.size());
  std::vector<long> tp(classes.size(), 0), fp(classes.size(), 0), fn(classes.size(), 0);
  long correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const int a = actual[i];
    const int p = predicted[i];
    if (a < 0 || a >= num_classes || p < 0 || p >= num_classes) {
      throw SchemaError("evaluate: class index out of range");
    }
    if (a == p) {
      ++correct;
      ++tp[static_cast<std::size_t>(a)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(a)];
    }
  }

  const auto ratio = [](long num, long den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };

  MetricsReport report;
  report.precision = static_cast<double>(correct) / static_cast<double>(actual.size());
  report.micro_f1 = report.precision;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ClassMetrics m;
    m.label = classes[c];
    m.support = static_cast<int>(tp[c] + fn[c]);
    m.precision = ratio(tp[c], tp[c] + fp[c]);
    m.recall = ratio(tp[c], tp[c] + fn[c]);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    report.macro_f1 += m.f1;
    report.per_class.push_back(std::move(m));
  }
  report.macro_f1 /= static_cast<double>(classes.size());
  if (report.precision < 0.0 || report.precision > 1.0 || report.macro_f1 < 0.0 ||
      report.macro_f1 > 1.0) {
    throw NumericError("evaluate: metric left [0, 1]");
  }
  return report;
}

ProbeAggregate run_probe(const Eigen::MatrixXd& x, std::span<const std::string> labels,
                         const ProbeConfig& cfg, std::uint64_t seed, int threads) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ShapeError("run_probe: embeddings and labels disagree on row count");
  }
  const std::vector<std::string> classes = class_labels(labels);
  if (classes.size() < 2) throw SchemaError("run_probe: need at least 2 classes");
  const std::vector<int> y = encode_labels(labels, classes);

  ProbeAggregate agg;
  agg.run_seeds.resize(static_cast<std::size_t>(cfg.repeats));
  for (int r = 0; r < cfg.repeats; ++r) {
    agg.run_seeds[static_cast<std::size_t>(r)] =
        cfg.seeds.empty()
            ? mix_seed(mix_seed(seed, rng_stream::kProbeSplit), static_cast<std::uint64_t>(r))
            : cfg.seeds[static_cast<std::size_t>(r)];
  }
  agg.runs.resize(static_cast<std::size_t>(cfg.repeats));

  parallel_for(static_cast<std::size_t>(cfg.repeats), threads, [&](std::size_t r) {
    const Split split = stratified_split(y, static_cast<int>(classes.size()),
                                         cfg.train_fraction, agg.run_seeds[r]);
    Eigen::MatrixXd train_x(static_cast<Eigen::Index>(split.train.size()), x.cols());
    std::vector<int> train_y(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      train_x.row(static_cast<Eigen::Index>(i)) = x.row(split.train[i]);
      train_y[i] = y[static_cast<std::size_t>(split.train[i])];
    }
    Eigen::MatrixXd test_x(static_cast<Eigen::Index>(split.test.size()), x.cols());
    std::vector<int> test_y(split.test.size());
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      test_x.row(static_cast<Eigen::Index>(i)) = x.row(split.test[i]);
      test_y[i] = y[static_cast<std::size_t>(split.test[i])];
    }
    const Eigen::MatrixXd w = train_probe(train_x, train_y, static_cast<int>(classes.size()), cfg);
    agg.runs[r] = evaluate(predict(w, test_x), test_y, classes);
  });

  agg.mean.per_class.resize(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) agg.mean.per_class[c].label = classes[c];
  double best_precision = -1.0;
  for (const MetricsReport& run : agg.runs) {
    agg.mean.precision += run.precision;
    agg.mean.macro_f1 += run.macro_f1;
    agg.mean.micro_f1 += run.micro_f1;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      agg.mean.per_class[c].support += run.per_class[c].support;
      agg.mean.per_class[c].precision += run.per_class[c].precision;
      agg.mean.per_class[c].recall += run.per_class[c].recall;
      agg.mean.per_class[c].f1 += run.per_class[c].f1;
    }
    if (run.precision > best_precision) {
      best_precision = run.precision;
      agg.best = run;
    }
  }
  const double inv_r = 1.0 / static_cast<double>(cfg.repeats);
  agg.mean.precision *= inv_r;
  agg.mean.macro_f1 *= inv_r;
  agg.mean.micro_f1 *= inv_r;
  for (ClassMetrics& m : agg.mean.per_class) {
    m.support = static_cast<int>(std::lround(m.support * inv_r));
    m.precision *= inv_r;
    m.recall *= inv_r;
    m.f1 *= inv_r;
  }
  return agg;
}

std::string format_metrics_csv(const ProbeAggregate& agg, bool micro_f1) {
  std::ostringstream out;
  out << "run,seed,precision," << (micro_f1 ? "micro_f1" : "macro_f1") << "\n";
  for (std::size_t r = 0; r < agg.runs.size(); ++r) {
    const MetricsReport& m = agg.runs[r];
    out << r << "," << agg.run_seeds[r] << "," << format_double(m.precision) << ","
        << format_double(micro_f1 ? m.micro_f1 : m.macro_f1) << "\n";
  }
  out << "mean,," << format_double(agg.mean.precision) << ","
      << format_double(micro_f1 ? agg.mean.micro_f1 : agg.mean.macro_f1) << "\n";
  out << "best,," << format_double(agg.best.precision) << ","
      << format_double(micro_f1 ? agg.best.micro_f1 : agg.best.macro_f1) << "\n";
  return out.str();
}

std::string format_metrics_table(const ProbeAggregate& agg, bool micro_f1) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  std::size_t width = 5;
  for (const ClassMetrics& m : agg.best.per_class) width = std::max(width, m.label.size());
  out << std::left << std::setw(static_cast<int>(width + 2)) << "class" << std::right
      << std::setw(8) << "support" << std::setw(11) << "precision" << std::setw(8) << "recall"
      << std::setw(8) << "f1" << "\n";
  for (const ClassMetrics& m : agg.best.per_class) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << m.label << std::right
        << std::setw(8) << m.support << std::setw(11) << m.precision << std::setw(8) << m.recall
        << std::setw(8) << m.f1 << "\n";
  }
  const char* f1_name = micro_f1 ? "micro_f1" : "macro_f1";
  out << "\n";
  out << "precision  mean " << agg.mean.precision << "  best " << agg.best.precision << "\n";
  out << f1_name << "   mean " << (micro_f1 ? agg.mean.micro_f1 : agg.mean.macro_f1) << "  best "
      << (micro_f1 ? agg.best.micro_f1 : agg.best.macro_f1) << "\n";
  out << "runs " << agg.runs.size() << "\n";
  return out.str();
}

}  // namespace segcl
