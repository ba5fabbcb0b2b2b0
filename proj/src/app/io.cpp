#include "cgpdf/app/io.hpp"

#include <charconv>
#include <fstream>
#include <memory>
#include <system_error>

#include <openssl/evp.h>

namespace cgpdf::app {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[md[i] >> 4];
    out[2 * i + 1] = hex[md[i] & 15];
  }
  return out;
}

void write_atomic(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

Csv::Csv(std::vector<std::string> header) : cols_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

void Csv::row(const std::vector<double>& values) {
  if (values.size() != cols_) throw std::logic_error("csv row has the wrong width");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ += ',';
    out_ += fmt(values[i]);
  }
  out_ += '\n';
  ++rows_;
}

void Csv::row(std::initializer_list<double> values) {
  row(std::vector<double>(values));
}

std::string grid_csv(const GridDensity& g, const std::vector<std::string>& names,
                     const std::string& value_name) {
  std::vector<std::string> header(names);
  header.push_back(value_name);
  Csv csv(header);
  const Mat pts = g.points();
  std::vector<double> row(names.size() + 1);
  for (Index j = 0; j < g.size(); ++j) {
    for (Index k = 0; k < g.dims(); ++k) row[k] = pts(k, j);
    row.back() = g.values()(j);
    csv.row(row);
  }
  return csv.str();
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + root_.string() + "'");
}

void OutputDir::write(const std::string& rel, std::string_view content) {
  write_atomic(root_ / rel, content);
  files_.push_back({rel, sha256_hex(content), content.size()});
}

void OutputDir::write_json(const std::string& rel, const json& j) {
  write(rel, j.dump(2) + "\n");
}

void OutputDir::finish(json manifest) {
  json files = json::array();
  for (const auto& f : files_)
    files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  manifest["files"] = std::move(files);
  write_atomic(root_ / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace cgpdf::app
