#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>

namespace polsqueeze {

/// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit
/// counter and a 64-bit key to 128 pseudorandom bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Independent purposes drawing from one trajectory.
enum class StreamPurpose : std::uint16_t {
  kVacuumNoise = 0,
  kRamanNoise = 1,
  kGawbs = 2,
  kLossNoise = 3,
  kTest = 0xFFFF,
};

/// Counter-based random stream. The sequence depends only on (seed,
/// trajectory index, purpose), so any trajectory can be regenerated in
/// isolation, in any order, on any thread.
class RngStream {
 public:
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  RngStream(std::uint64_t seed, std::uint64_t trajectory_index,
            StreamPurpose purpose = StreamPurpose::kVacuumNoise);

  result_type operator()();

  /// Uniform double in the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal deviate (Box-Muller, pairs cached).
  double normal();
  /// Complex deviate with independent N(0,1) real and imaginary parts.
  std::complex<double> complex_normal();

  std::uint64_t trajectory_index() const { return index_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t index_;
  std::uint16_t purpose_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int position_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// The stream for trajectory `index` of a run seeded with `master_seed`.
RngStream trajectory_rng(std::uint64_t master_seed, std::uint64_t index,
                         StreamPurpose purpose = StreamPurpose::kVacuumNoise);

}  // namespace polsqueeze
