#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace segcl::testing {

/// Self-deleting scratch file (plus any sidecars registered later).
struct TempFile {
  std::string path;

  explicit TempFile(const std::string& contents = "") {
    static std::atomic<int> counter{0};
    path = (std::filesystem::temp_directory_path() /
            ("segcl_test_" + std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(std::random_device{}())))
               .string();
    std::ofstream f(path, std::ios::binary);
    f << contents;
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    std::filesystem::remove(path + ".bin", ec);
    std::filesystem::remove(path + ".manifest.json", ec);
    std::filesystem::remove(path + ".history.csv", ec);
  }
};

/// Self-deleting scratch directory for multi-artifact stages.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("segcl_test_dir_" + std::to_string(counter.fetch_add(1)) + "_" +
            std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace segcl::testing
