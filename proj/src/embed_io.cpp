#include "segcl/embed_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>

#include "segcl/core.hpp"
#include "segcl/threads.hpp"
#include "segcl/vectors.hpp"

namespace segcl {

namespace {
constexpr char kSidecarMagic[4] = {'S', 'E', 'G', 'B'};
constexpr std::uint32_t kSidecarVersion = 1;
}  // namespace

Eigen::Index EmbeddingTable::find(const std::string& doc_id) const {
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    if (doc_ids[i] == doc_id) return static_cast<Eigen::Index>(i);
  }
  return -1;
}

EmbeddingTable embed_graphs(std::span<const IntraRelationGraph> graphs,
                            const ModelParams& params, const EncoderConfig& cfg,
                            int threads, std::vector<std::string>* empty_docs) {
  cfg.validate();
  std::unique_ptr<WordVectors> vectors;
  if (cfg.feature_mode == FeatureMode::Pretrained) {
    vectors = std::make_unique<WordVectors>(WordVectors::load(cfg.pretrained_vectors));
  }

  EmbeddingTable table;
  table.doc_ids.resize(graphs.size());
  table.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graphs.size()), cfg.out);
  std::mutex empty_mutex;

  parallel_for(graphs.size(), threads, [&](std::size_t i) {
    const IntraRelationGraph& g = graphs[i];
    table.doc_ids[i] = g.doc_id;
    if (g.node_count() == 0) {
      if (empty_docs != nullptr) {
        const std::lock_guard<std::mutex> lock(empty_mutex);
        empty_docs->push_back(g.doc_id);
      }
      return;
    }
    const Eigen::MatrixXd x = init_features(g, cfg, &params, vectors.get());
    const Eigen::MatrixXd h =
        cfg.readout_structural ? gcn_forward(g, x, params, cfg) : mlp_forward(x, params);
    table.vectors.row(static_cast<Eigen::Index>(i)) = readout(h);
  });
  if (empty_docs != nullptr) std::sort(empty_docs->begin(), empty_docs->end());
  return table;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  if (static_cast<Eigen::Index>(table.doc_ids.size()) != table.vectors.rows()) {
    throw ShapeError("save_embeddings: doc_ids and vectors disagree on row count");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open embeddings file for writing: " + path);
  for (std::size_t i = 0; i < table.doc_ids.size(); ++i) {
    out << table.doc_ids[i] << "\t";
    for (Eigen::Index c = 0; c < table.vectors.cols(); ++c) {
      if (c > 0) out << ",";
      out << format_double(table.vectors(static_cast<Eigen::Index>(i), c));
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing embeddings file: " + path);

  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open embeddings sidecar for writing: " + path + ".bin");
  bin.write(kSidecarMagic, 4);
  const std::uint32_t version = kSidecarVersion;
  const std::uint64_t rows = static_cast<std::uint64_t>(table.vectors.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(table.vectors.cols());
  bin.write(reinterpret_cast<const char*>(&version), sizeof version);
  bin.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  bin.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index r = 0; r < table.vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.vectors.cols(); ++c) {
      const double v = table.vectors(r, c);
      bin.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
  if (!bin) throw IoError("failed writing embeddings sidecar: " + path + ".bin");
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings file: " + path);
  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "embeddings " + path + " line " + std::to_string(line_no);
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw SchemaError(where + ": expected `doc_id<TAB>v1,v2,...`");
    }
    table.doc_ids.push_back(line.substr(0, tab));
    std::vector<double> values;
    std::stringstream cells(line.substr(tab + 1));
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw SchemaError(where + ": bad number `" + cell + "`");
      }
    }
    if (values.empty()) throw SchemaError(where + ": no values");
    if (dim == -1) dim = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      throw SchemaError(where + ": expected " + std::to_string(dim) + " values, got " +
                        std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw SchemaError("embeddings " + path + ": empty file");
  table.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      table.vectors(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  return table;
}

Eigen::MatrixXd load_embeddings_sidecar(const std::string& path) {
  const std::string bin_path = path + ".bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open embeddings sidecar: " + bin_path);
  char magic[4] = {};
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  bin.read(magic, 4);
  bin.read(reinterpret_cast<char*>(&version), sizeof version);
  bin.read(reinterpret_cast<char*>(&rows), sizeof rows);
  bin.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!bin || std::memcmp(magic, kSidecarMagic, 4) != 0) {
    throw SchemaError("embeddings sidecar " + bin_path + ": bad header");
  }
  if (version != kSidecarVersion) {
    throw SchemaError("embeddings sidecar " + bin_path + ": unsupported version " +
                      std::to_string(version));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0.0;
      bin.read(reinterpret_cast<char*>(&v), sizeof v);
      m(r, c) = v;
    }
  }
  if (!bin) throw SchemaError("embeddings sidecar " + bin_path + ": truncated payload");
  return m;
}

}  // namespace segcl
