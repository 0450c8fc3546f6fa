#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fracwave {

std::string sha256_hex(const void* data, std::size_t n);
std::string sha256_file(const std::filesystem::path& path);

// Raw little-endian row-major payload next to a plain-text sidecar
// <path>.meta that pins dtype, shape, order and endianness. Complex arrays
// interleave re, im per element.
void write_array(const std::filesystem::path& path, const Eigen::MatrixXd& a);
void write_array(const std::filesystem::path& path, const Eigen::MatrixXcd& a);
Eigen::MatrixXd read_real_array(const std::filesystem::path& path);
Eigen::MatrixXcd read_complex_array(const std::filesystem::path& path);

// Shortest decimal that parses back to the same double.
std::string format_number(double x);

// RFC-style quoting: fields holding commas, quotes or line breaks are
// wrapped in double quotes with embedded quotes doubled.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
// All records including the header row.
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;     // relative to the artifact directory, '/' separators
  std::string sha256;
  std::uintmax_t bytes = 0;
  std::string lineage;  // seed provenance tag, '-' when not applicable
};

// Plain-text manifest.txt in dir. The note goes into the header line.
void write_manifest(const std::filesystem::path& dir,
                    const std::vector<ManifestEntry>& entries,
                    const std::string& note);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);

// Two-way completeness: every file below dir except the manifest itself is
// listed with matching checksum and size, and every entry exists. Throws
// naming the first offending file.
void verify_manifest(const std::filesystem::path& dir);

}  // namespace fracwave
