#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "cgpdf/app/config.hpp"
#include "cgpdf/grid.hpp"

namespace cgpdf::app {

std::string sha256_hex(std::string_view data);

// Writes through a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& p, std::string_view content);

// Shortest round-trip decimal form.
std::string fmt(double x);

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(std::initializer_list<double> values);
  void row(const std::vector<double>& values);
  Index n_rows() const { return rows_; }
  const std::string& str() const { return out_; }

 private:
  std::size_t cols_;
  Index rows_ = 0;
  std::string out_;
};

// Axis columns then the density value.
std::string grid_csv(const GridDensity& g, const std::vector<std::string>& names,
                     const std::string& value_name = "density");

struct FileEntry {
  std::string path;
  std::string sha256;
  std::size_t bytes = 0;
};

// Output directory that records every file it writes. finish() writes
// manifest.json, listing exactly those files, atomically.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& rel, std::string_view content);
  void write_json(const std::string& rel, const json& j);
  const std::vector<FileEntry>& files() const { return files_; }

  void finish(json manifest);

 private:
  std::filesystem::path root_;
  std::vector<FileEntry> files_;
};

}  // namespace cgpdf::app
