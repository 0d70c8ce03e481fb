#include "segcl/vectors.hpp"

#include <fstream>
#include <sstream>

namespace segcl {

WordVectors WordVectors::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vectors file: " + path);

  WordVectors vectors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);

    // word2vec-style "count dim" header
    if (line_no == 1 && values.size() == 1) continue;

    if (values.empty())
      throw SchemaError("vectors file " + path + " line " +
                        std::to_string(line_no) + ": no vector values");
    if (vectors.dim_ == 0) vectors.dim_ = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != vectors.dim_)
      throw SchemaError("vectors file " + path + " line " +
                        std::to_string(line_no) + ": expected " +
                        std::to_string(vectors.dim_) + " values, got " +
                        std::to_string(values.size()));

    Eigen::VectorXd vec = Eigen::Map<Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size()));
    double norm = vec.norm();
    if (norm == 0.0)
      throw SchemaError("vectors file " + path + " line " +
                        std::to_string(line_no) + ": zero vector for \"" +
                        word + "\"");
    vectors.table_[word] = vec / norm;
  }
  if (vectors.table_.empty())
    throw SchemaError("vectors file " + path + ": no vectors");
  return vectors;
}

const Eigen::VectorXd* WordVectors::find(const std::string& word) const {
  auto it = table_.find(word);
  return it == table_.end() ? nullptr : &it->second;
}

}  // namespace segcl
