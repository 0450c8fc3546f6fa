#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fracwave/io.hpp"
#include "fracwave/rng.hpp"

using namespace fracwave;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fracwave-io-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void dump(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("", 0) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc", 3) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::string two_blocks =
      "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq";
  CHECK(sha256_hex(two_blocks.data(), two_blocks.size()) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  std::string million(1000000, 'a');
  CHECK(sha256_hex(million.data(), million.size()) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");

  fs::path dir = fresh_dir("sha");
  dump(dir / "abc.txt", "abc");
  CHECK(sha256_file(dir / "abc.txt") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS((void)sha256_file(dir / "absent.txt"), std::runtime_error);
}

TEST_CASE("binary arrays round-trip bitwise") {
  fs::path dir = fresh_dir("arrays");
  RngStream rng(3, "io-arrays", 0);

  Eigen::MatrixXd a(5, 7);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  a(0, 0) = 0.0;
  a(0, 1) = -0.0;
  a(0, 2) = 1e-308;
  a(0, 3) = -1e308;
  a(0, 4) = 0.1;
  write_array(dir / "a.bin", a);
  Eigen::MatrixXd back = read_real_array(dir / "a.bin");
  REQUIRE(back.rows() == a.rows());
  REQUIRE(back.cols() == a.cols());
  CHECK(std::memcmp(back.data(), a.data(),
                    sizeof(double) * std::size_t(a.size())) == 0);

  Eigen::MatrixXcd c(3, 4);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      c(i, j) = std::complex<double>(rng.normal(), rng.normal());
  write_array(dir / "c.bin", c);
  Eigen::MatrixXcd cback = read_complex_array(dir / "c.bin");
  REQUIRE(cback.rows() == c.rows());
  REQUIRE(cback.cols() == c.cols());
  CHECK(std::memcmp(cback.data(), c.data(),
                    sizeof(std::complex<double>) * std::size_t(c.size())) == 0);

  // dtype confusion and damaged payloads are refused
  CHECK_THROWS_AS((void)read_complex_array(dir / "a.bin"), std::runtime_error);
  CHECK_THROWS_AS((void)read_real_array(dir / "c.bin"), std::runtime_error);
  fs::remove(dir / "a.bin.meta");
  CHECK_THROWS_AS((void)read_real_array(dir / "a.bin"), std::runtime_error);
  dump(dir / "t.bin", "xx");
  dump(dir / "t.bin.meta",
       "format fracwave-array-v1\ndtype float64\nshape 5 7\norder row-major\n"
       "endian little\n");
  CHECK_THROWS_AS((void)read_real_array(dir / "t.bin"), std::runtime_error);
}

TEST_CASE("number formatting parses back exactly") {
  const double cases[] = {0.0,    -0.0,   0.1,       1.0 / 3.0, 1e-17,
                          6.02e23, -2.5e-7, 3.141592653589793, 1e308, 5e-324};
  for (double x : cases) {
    std::string s = format_number(x);
    double y = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
  }
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("csv quoting survives round-trip") {
  fs::path dir = fresh_dir("csv");
  std::vector<std::string> header = {"id", "text", "value"};
  std::vector<std::vector<std::string>> rows = {
      {"1", "plain", "0.5"},
      {"2", "comma, inside", "-1"},
      {"3", "quote \" inside", "2"},
      {"4", "line\nbreak", "3"},
      {"5", "both \",\"\n mixed", "4"},
      {"6", "", "5"},
  };
  write_csv(dir / "t.csv", header, rows);
  auto records = read_csv(dir / "t.csv");
  REQUIRE(records.size() == rows.size() + 1);
  CHECK(records[0] == header);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(records[i + 1] == rows[i]);

  CHECK_THROWS_AS(write_csv(dir / "bad.csv", header, {{"too", "short"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_csv(dir / "bad.csv", {}, {}), std::invalid_argument);

  dump(dir / "crlf.csv", "a,b\r\n\"x,y\",\"he said \"\"hi\"\"\"\r\n");
  auto crlf = read_csv(dir / "crlf.csv");
  REQUIRE(crlf.size() == 2);
  CHECK(crlf[1][0] == "x,y");
  CHECK(crlf[1][1] == "he said \"hi\"");

  dump(dir / "open.csv", "a,\"unterminated\n");
  CHECK_THROWS_AS((void)read_csv(dir / "open.csv"), std::runtime_error);
}

TEST_CASE("manifest verifies completeness both ways") {
  fs::path dir = fresh_dir("manifest");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  write_array(dir / "a.bin", a);
  write_csv(dir / "notes.csv", {"k", "v"}, {{"alpha", "1"}});
  fs::create_directories(dir / "sub");
  dump(dir / "sub" / "log.txt", "hello\n");

  std::vector<ManifestEntry> entries;
  for (const char* rel :
       {"a.bin", "a.bin.meta", "notes.csv", "sub/log.txt"}) {
    ManifestEntry e;
    e.path = rel;
    e.sha256 = sha256_file(dir / rel);
    e.bytes = fs::file_size(dir / rel);
    e.lineage = (std::string(rel) == "a.bin") ? "seed=3/io/0" : "-";
    entries.push_back(e);
  }
  write_manifest(dir, entries, "config=deadbeef seed=3");
  auto back = read_manifest(dir);
  REQUIRE(back.size() == entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(back[i].path == entries[i].path);
    CHECK(back[i].sha256 == entries[i].sha256);
    CHECK(back[i].bytes == entries[i].bytes);
    CHECK(back[i].lineage == entries[i].lineage);
  }
  CHECK_NOTHROW(verify_manifest(dir));

  // stray file
  dump(dir / "stray.txt", "x");
  CHECK_THROWS_WITH_AS(verify_manifest(dir),
                       doctest::Contains("not in the manifest"),
                       std::runtime_error);
  fs::remove(dir / "stray.txt");

  // tampered payload (same size)
  {
    std::fstream f(dir / "sub" / "log.txt",
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.put('H');
  }
  CHECK_THROWS_WITH_AS(verify_manifest(dir),
                       doctest::Contains("checksum mismatch"),
                       std::runtime_error);
  dump(dir / "sub" / "log.txt", "hello\n");
  CHECK_NOTHROW(verify_manifest(dir));

  // truncation changes size
  dump(dir / "notes.csv", "k,v\n");
  CHECK_THROWS_WITH_AS(verify_manifest(dir), doctest::Contains("size mismatch"),
                       std::runtime_error);
  write_csv(dir / "notes.csv", {"k", "v"}, {{"alpha", "1"}});
  CHECK_NOTHROW(verify_manifest(dir));

  // listed but deleted
  fs::remove(dir / "a.bin.meta");
  CHECK_THROWS_WITH_AS(verify_manifest(dir),
                       doctest::Contains("missing on disk"),
                       std::runtime_error);
  write_array(dir / "a.bin", a);
  CHECK_NOTHROW(verify_manifest(dir));

  std::vector<ManifestEntry> dup = {entries[0], entries[0]};
  CHECK_THROWS_WITH_AS(
      [&] {
        write_manifest(dir, dup, "dup");
        verify_manifest(dir);
      }(),
      doctest::Contains("twice"), std::runtime_error);
  write_manifest(dir, entries, "config=deadbeef seed=3");

  CHECK_THROWS_AS(write_manifest(dir, entries, "two\nlines"),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)read_manifest(dir / "sub"), std::runtime_error);
}
