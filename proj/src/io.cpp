#include "cqft/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace cqft::io {

const std::vector<double>& Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
  return data[static_cast<std::size_t>(it - columns.begin())];
}

void write_csv(const fs::path& path, const Metadata& meta, const Table& table) {
  if (table.data.size() != table.columns.size()) throw std::invalid_argument("column count mismatch");
  for (const auto& c : table.data) {
    if (c.size() != table.rows()) throw std::invalid_argument("ragged table");
  }
  std::string out;
  for (const auto& [k, v] : meta) out += fmt::format("# {}: {}\n", k, v);
  out += fmt::format("{}\n", fmt::join(table.columns, ","));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += fmt::format("{:.17g}", table.data[c][r]);
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << out;
}

CsvFile read_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  CsvFile out;
  std::string line;
  bool header = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (!header && line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon != std::string::npos)
        out.meta.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!header) {
      while (std::getline(ss, cell, ',')) out.table.columns.push_back(cell);
      out.table.data.resize(out.table.columns.size());
      header = true;
      continue;
    }
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= out.table.columns.size()) throw std::runtime_error("too many cells in " + path.string());
      out.table.data[c++].push_back(std::stod(cell));
    }
    if (c != out.table.columns.size()) throw std::runtime_error("short row in " + path.string());
  }
  if (!header) throw std::runtime_error("no header in " + path.string());
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (f) {
    f.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

nlohmann::json list_files(const fs::path& dir, const fs::path& exclude) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && fs::absolute(e.path()) != fs::absolute(exclude)) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : files) {
    out.push_back({{"path", fs::relative(p, dir).generic_string()},
                   {"bytes", fs::file_size(p)},
                   {"sha256", sha256_file(p)}});
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'C', 'Q', 'F', 'T', 'C', 'K', 'P', '1'};

template <class T>
void put(std::ostream& os, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <class T>
T take(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bits;
  if (!is.read(reinterpret_cast<char*>(bits.data()), sizeof(T))) throw std::runtime_error("checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_checkpoint(const fs::path& path, const Grid& grid, double time,
                      std::span<const std::uint64_t> index, std::span<const SpinorField> states) {
  if (index.size() != states.size()) throw std::invalid_argument("one index per checkpointed state");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(kMagic, sizeof kMagic);
  put<double>(f, grid.length());
  put<std::uint64_t>(f, grid.size());
  put<double>(f, time);
  put<std::uint64_t>(f, states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s].points() != grid.size()) throw std::invalid_argument("state does not match grid");
    put<std::uint64_t>(f, index[s]);
    for (const cplx z : states[s].data()) {
      put<double>(f, z.real());
      put<double>(f, z.imag());
    }
  }
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  if (!f.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not a checkpoint: " + path.string());
  Checkpoint c;
  c.L = take<double>(f);
  c.N = take<std::uint64_t>(f);
  c.time = take<double>(f);
  const auto count = take<std::uint64_t>(f);
  for (std::uint64_t s = 0; s < count; ++s) {
    c.index.push_back(take<std::uint64_t>(f));
    SpinorField psi(c.N);
    for (auto& z : psi.data()) {
      const double re = take<double>(f);
      z = {re, take<double>(f)};
    }
    c.states.push_back(std::move(psi));
  }
  if (f.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in checkpoint");
  return c;
}

}  // namespace cqft::io
