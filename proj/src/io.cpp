#include "fracwave/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fracwave {
namespace {

// FIPS 180-4 SHA-256.
constexpr std::array<std::uint32_t, 64> kSha256K = {
    0x428a2f98u, 0x71374491u, 0xb5c0fbcfu, 0xe9b5dba5u, 0x3956c25bu,
    0x59f111f1u, 0x923f82a4u, 0xab1c5ed5u, 0xd807aa98u, 0x12835b01u,
    0x243185beu, 0x550c7dc3u, 0x72be5d74u, 0x80deb1feu, 0x9bdc06a7u,
    0xc19bf174u, 0xe49b69c1u, 0xefbe4786u, 0x0fc19dc6u, 0x240ca1ccu,
    0x2de92c6fu, 0x4a7484aau, 0x5cb0a9dcu, 0x76f988dau, 0x983e5152u,
    0xa831c66du, 0xb00327c8u, 0xbf597fc7u, 0xc6e00bf3u, 0xd5a79147u,
    0x06ca6351u, 0x14292967u, 0x27b70a85u, 0x2e1b2138u, 0x4d2c6dfcu,
    0x53380d13u, 0x650a7354u, 0x766a0abbu, 0x81c2c92eu, 0x92722c85u,
    0xa2bfe8a1u, 0xa81a664bu, 0xc24b8b70u, 0xc76c51a3u, 0xd192e819u,
    0xd6990624u, 0xf40e3585u, 0x106aa070u, 0x19a4c116u, 0x1e376c08u,
    0x2748774cu, 0x34b0bcb5u, 0x391c0cb3u, 0x4ed8aa4au, 0x5b9cca4fu,
    0x682e6ff3u, 0x748f82eeu, 0x78a5636fu, 0x84c87814u, 0x8cc70208u,
    0x90befffau, 0xa4506cebu, 0xbef9a3f7u, 0xc67178f2u};

struct Sha256 {
  std::array<std::uint32_t, 8> h = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u,
                                    0xa54ff53au, 0x510e527fu, 0x9b05688cu,
                                    0x1f83d9abu, 0x5be0cd19u};
  std::array<unsigned char, 64> block{};
  std::size_t fill = 0;
  std::uint64_t total = 0;

  static std::uint32_t rotr(std::uint32_t x, int r) {
    return (x >> r) | (x << (32 - r));
  }

  void compress(const unsigned char* p) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t(p[4 * i]) << 24) |
             (std::uint32_t(p[4 * i + 1]) << 16) |
             (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
    }
    for (int i = 16; i < 64; ++i) {
      std::uint32_t s0 =
          rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      std::uint32_t s1 =
          rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
    std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
    for (int i = 0; i < 64; ++i) {
      std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      std::uint32_t ch = (e & f) ^ (~e & g);
      std::uint32_t t1 = hh + s1 + ch + kSha256K[i] + w[i];
      std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      std::uint32_t t2 = s0 + maj;
      hh = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += hh;
  }

  void update(const unsigned char* p, std::size_t n) {
    total += n;
    while (n > 0) {
      std::size_t take = std::min(n, block.size() - fill);
      std::memcpy(block.data() + fill, p, take);
      fill += take;
      p += take;
      n -= take;
      if (fill == block.size()) {
        compress(block.data());
        fill = 0;
      }
    }
  }

  std::string hex_digest() {
    std::uint64_t bits = total * 8;
    unsigned char one = 0x80;
    update(&one, 1);
    unsigned char zero = 0;
    while (fill != 56) update(&zero, 1);
    unsigned char len[8];
    for (int i = 0; i < 8; ++i) len[i] = (unsigned char)(bits >> (56 - 8 * i));
    update(len, 8);
    static const char* digits = "0123456789abcdef";
    std::string out(64, '0');
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 4; ++j) {
        unsigned char byte = (unsigned char)(h[i] >> (24 - 8 * j));
        out[8 * i + 2 * j] = digits[byte >> 4];
        out[8 * i + 2 * j + 1] = digits[byte & 0xf];
      }
    }
    return out;
  }
};

void write_bytes(const std::filesystem::path& path, const void* data,
                 std::size_t n) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(static_cast<const char*>(data), std::streamsize(n));
  if (!f) throw std::runtime_error("short write: " + path.string());
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  f.seekg(0, std::ios::end);
  std::vector<unsigned char> buf(std::size_t(f.tellg()));
  f.seekg(0);
  f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (!f) throw std::runtime_error("short read: " + path.string());
  return buf;
}

// Payloads are little-endian on disk regardless of host order.
void to_little(std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::big) {
    for (double& x : v) {
      std::uint64_t u;
      std::memcpy(&u, &x, 8);
      u = __builtin_bswap64(u);
      std::memcpy(&x, &u, 8);
    }
  }
}

void write_payload(const std::filesystem::path& path, const char* dtype,
                   Eigen::Index rows, Eigen::Index cols,
                   std::vector<double> payload) {
  to_little(payload);
  write_bytes(path, payload.data(), payload.size() * sizeof(double));
  std::ostringstream meta;
  meta << "format fracwave-array-v1\n"
       << "dtype " << dtype << "\n"
       << "shape " << rows << " " << cols << "\n"
       << "order row-major\n"
       << "endian little\n";
  std::string text = meta.str();
  write_bytes(path.string() + ".meta", text.data(), text.size());
}

struct ArrayMeta {
  std::string dtype;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

ArrayMeta read_meta(const std::filesystem::path& path) {
  std::ifstream f(path.string() + ".meta");
  if (!f)
    throw std::runtime_error("missing array sidecar: " + path.string() +
                             ".meta");
  ArrayMeta m;
  std::string key;
  bool format_ok = false;
  while (f >> key) {
    if (key == "format") {
      std::string v;
      f >> v;
      format_ok = (v == "fracwave-array-v1");
    } else if (key == "dtype") {
      f >> m.dtype;
    } else if (key == "shape") {
      f >> m.rows >> m.cols;
    } else if (key == "order") {
      std::string v;
      f >> v;
      if (v != "row-major")
        throw std::runtime_error("unsupported array order in " +
                                 path.string() + ".meta");
    } else if (key == "endian") {
      std::string v;
      f >> v;
      if (v != "little")
        throw std::runtime_error("unsupported array endianness in " +
                                 path.string() + ".meta");
    } else {
      throw std::runtime_error("unknown sidecar key '" + key + "' in " +
                               path.string() + ".meta");
    }
  }
  if (!format_ok)
    throw std::runtime_error("not a fracwave-array-v1 sidecar: " +
                             path.string() + ".meta");
  if (m.rows < 0 || m.cols < 0)
    throw std::runtime_error("negative shape in " + path.string() + ".meta");
  return m;
}

std::vector<double> read_payload(const std::filesystem::path& path,
                                 std::size_t expect) {
  std::vector<unsigned char> raw = read_bytes(path);
  if (raw.size() != expect * sizeof(double))
    throw std::runtime_error("array payload size mismatch: " + path.string());
  std::vector<double> v(expect);
  std::memcpy(v.data(), raw.data(), raw.size());
  to_little(v);  // involution, restores host order
  return v;
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quoted_field(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace

std::string sha256_hex(const void* data, std::size_t n) {
  Sha256 s;
  s.update(static_cast<const unsigned char*>(data), n);
  return s.hex_digest();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for hashing: " + path.string());
  Sha256 s;
  std::array<char, 1 << 16> buf;
  while (f) {
    f.read(buf.data(), std::streamsize(buf.size()));
    s.update(reinterpret_cast<const unsigned char*>(buf.data()),
             std::size_t(f.gcount()));
  }
  return s.hex_digest();
}

void write_array(const std::filesystem::path& path, const Eigen::MatrixXd& a) {
  std::vector<double> payload(std::size_t(a.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) payload[k++] = a(i, j);
  write_payload(path, "float64", a.rows(), a.cols(), std::move(payload));
}

void write_array(const std::filesystem::path& path, const Eigen::MatrixXcd& a) {
  std::vector<double> payload(2 * std::size_t(a.size()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      payload[k++] = a(i, j).real();
      payload[k++] = a(i, j).imag();
    }
  write_payload(path, "complex128", a.rows(), a.cols(), std::move(payload));
}

Eigen::MatrixXd read_real_array(const std::filesystem::path& path) {
  ArrayMeta m = read_meta(path);
  if (m.dtype != "float64")
    throw std::runtime_error("expected float64 array at " + path.string() +
                             ", sidecar says " + m.dtype);
  std::vector<double> v =
      read_payload(path, std::size_t(m.rows) * std::size_t(m.cols));
  Eigen::MatrixXd a(m.rows, m.cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows; ++i)
    for (Eigen::Index j = 0; j < m.cols; ++j) a(i, j) = v[k++];
  return a;
}

Eigen::MatrixXcd read_complex_array(const std::filesystem::path& path) {
  ArrayMeta m = read_meta(path);
  if (m.dtype != "complex128")
    throw std::runtime_error("expected complex128 array at " + path.string() +
                             ", sidecar says " + m.dtype);
  std::vector<double> v =
      read_payload(path, 2 * std::size_t(m.rows) * std::size_t(m.cols));
  Eigen::MatrixXcd a(m.rows, m.cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows; ++i)
    for (Eigen::Index j = 0; j < m.cols; ++j) {
      a(i, j) = std::complex<double>(v[k], v[k + 1]);
      k += 2;
    }
  return a;
}

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  if (header.empty()) throw std::invalid_argument("csv needs a header row");
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quoted_field(row[i]);
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  std::string text = out.str();
  write_bytes(path, text.data(), text.size());
}

std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path) {
  std::vector<unsigned char> raw = read_bytes(path);
  std::string text(raw.begin(), raw.end());
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_open = false;
  std::size_t i = 0;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_open = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_open) {
      quoted = true;
      field_open = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else if (c == '\r') {
      ++i;  // tolerate CRLF
    } else {
      field += c;
      field_open = true;
      ++i;
    }
  }
  if (quoted) throw std::runtime_error("unterminated quote in " + path.string());
  if (field_open || !row.empty()) end_row();
  return rows;
}

void write_manifest(const std::filesystem::path& dir,
                    const std::vector<ManifestEntry>& entries,
                    const std::string& note) {
  if (note.find('\n') != std::string::npos)
    throw std::invalid_argument("manifest note must be a single line");
  std::ostringstream out;
  out << "fracwave-manifest-v1 " << note << "\n";
  for (const auto& e : entries) {
    if (e.path.empty() || e.sha256.size() != 64 ||
        e.lineage.find_first_of(" \n") != std::string::npos)
      throw std::invalid_argument("malformed manifest entry for '" + e.path +
                                  "'");
    out << "entry " << e.sha256 << " " << e.bytes << " "
        << (e.lineage.empty() ? "-" : e.lineage) << " " << e.path << "\n";
  }
  std::string text = out.str();
  write_bytes(dir / "manifest.txt", text.data(), text.size());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.txt");
  if (!f)
    throw std::runtime_error("missing manifest: " +
                             (dir / "manifest.txt").string());
  std::string line;
  if (!std::getline(f, line) ||
      line.rfind("fracwave-manifest-v1", 0) != 0)
    throw std::runtime_error("not a fracwave-manifest-v1 file in " +
                             dir.string());
  std::vector<ManifestEntry> entries;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ManifestEntry e;
    ls >> tag >> e.sha256 >> e.bytes >> e.lineage;
    if (tag != "entry" || !ls)
      throw std::runtime_error("malformed manifest line: " + line);
    std::getline(ls, e.path);
    if (!e.path.empty() && e.path.front() == ' ') e.path.erase(0, 1);
    if (e.path.empty())
      throw std::runtime_error("manifest entry without a path: " + line);
    entries.push_back(std::move(e));
  }
  return entries;
}

void verify_manifest(const std::filesystem::path& dir) {
  std::vector<ManifestEntry> entries = read_manifest(dir);
  std::map<std::string, const ManifestEntry*> by_path;
  for (const auto& e : entries) {
    if (!by_path.emplace(e.path, &e).second)
      throw std::runtime_error("manifest lists '" + e.path + "' twice");
  }
  std::size_t seen = 0;
  for (const auto& p : std::filesystem::recursive_directory_iterator(dir)) {
    if (!p.is_regular_file()) continue;
    std::string rel =
        std::filesystem::relative(p.path(), dir).generic_string();
    if (rel == "manifest.txt") continue;
    auto it = by_path.find(rel);
    if (it == by_path.end())
      throw std::runtime_error("file '" + rel + "' is not in the manifest");
    const ManifestEntry& e = *it->second;
    std::uintmax_t bytes = std::filesystem::file_size(p.path());
    if (bytes != e.bytes)
      throw std::runtime_error("size mismatch for '" + rel + "'");
    if (sha256_file(p.path()) != e.sha256)
      throw std::runtime_error("checksum mismatch for '" + rel + "'");
    ++seen;
  }
  if (seen != entries.size())
    for (const auto& e : entries)
      if (!std::filesystem::exists(dir / e.path))
        throw std::runtime_error("manifest entry '" + e.path +
                                 "' is missing on disk");
}

}  // namespace fracwave
