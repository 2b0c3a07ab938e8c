#pragma once

#include <cstdint>
#include <random>

namespace tdqmc {

enum class StreamPurpose : std::uint64_t {
  initial = 1,
  metropolis = 2,
  diffusion = 3,
  bath_offset = 4,
  bath_thermal = 5,
  calibration = 6,
};

struct StreamId {
  std::uint64_t walker = 0;
  std::uint64_t species = 0;
  StreamPurpose purpose = StreamPurpose::initial;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Independent reproducible random stream keyed by (seed, walker, species,
/// purpose). Identical keys give identical sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tdqmc
