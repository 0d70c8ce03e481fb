#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>

#include "segcl/core.hpp"

namespace segcl {

/// Pretrained word vectors in text format: one `word v1 v2 ... vd` row per
/// line, with an optional `count dim` header. Vectors are unit-normalized
/// on load; zero vectors are rejected.
class WordVectors {
 public:
  static WordVectors load(const std::string& path);

  int dim() const { return dim_; }
  std::size_t size() const { return table_.size(); }
  const Eigen::VectorXd* find(const std::string& word) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

}  // namespace segcl
