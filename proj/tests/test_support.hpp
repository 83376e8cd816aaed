#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "featdistill/scene.hpp"
#include "featdistill/trainer.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("featdistill_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Relative path -> FNV-1a of contents, for every regular file under root.
inline std::vector<std::pair<std::string, std::uint64_t>> tree_hashes(const fs::path& root) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out.emplace_back(fs::relative(entry.path(), root).string(), featdistill::fnv1a64(read_file(entry.path())));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// The fixed 20-image natural-like corpus used for sweeps.
inline const std::vector<featdistill::ImageBuffer>& corpus20() {
  static const auto corpus = featdistill::make_scene_corpus(2024, 20, 128, 128);
  return corpus;
}

}  // namespace testsupport
