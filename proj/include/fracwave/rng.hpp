#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace fracwave {

// Philox4x32-10 counter-based generator (Salmon et al. reference constants).
// Streams are keyed by (seed, tag, replica) so replicas may be generated in
// any order and on any thread with identical results.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::string_view tag, std::uint64_t replica = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // [0,1) with 53 random bits.
  double uniform01();
  // (0,1]; safe as a log argument.
  double uniform_open0();
  double uniform(double a, double b);
  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; second value cached.
  double normal();
  // E[z] = 0, E[|z|^2] = 1, E[z^2] = 0.
  std::complex<double> normal_complex();

  std::vector<double> normals(std::size_t n);

private:
  void refill();

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];  // ctr_[0] is the running block counter
  std::uint32_t out_[4];
  int avail_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
void philox4x32_10(const std::uint32_t ctr[4], const std::uint32_t key[2],
                   std::uint32_t out[4]);

// 64-bit FNV-1a, used to hash stream tags.
std::uint64_t fnv1a64(std::string_view s);

// Deterministic parallel loop: body(i) for i in [0, n). Bodies must write only
// to disjoint slots; scheduling order never affects results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fracwave
