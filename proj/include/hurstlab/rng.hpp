#pragma once

#include <cmath>
#include <cstdint>

namespace hurstlab {

// Purpose tag for a random stream. Each (master_seed, replication, stream)
// triple owns a disjoint counter block, so the draw order of one consumer can
// never perturb another and parallel schedules cannot change results.
enum class RandomStream : std::uint16_t {
  kPath = 1,          // Gaussian path innovations
  kHurstField = 2,    // random Hurst-function trajectories
  kAsymptoticMc = 3,  // Monte Carlo for asymptotic constants
};

struct SeedLineage {
  std::uint64_t master_seed = 0;
  std::uint64_t replication = 0;
  RandomStream stream = RandomStream::kPath;
};

// Philox 4x32-10 counter-based generator. The key carries the master seed;
// the high 64 counter bits carry (stream, replication); the low 64 bits are
// the running block counter. Standard multiplier/Weyl constants.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  explicit Philox4x32(const SeedLineage& seed) {
    key_[0] = static_cast<std::uint32_t>(seed.master_seed);
    key_[1] = static_cast<std::uint32_t>(seed.master_seed >> 32);
    const std::uint64_t hi = (static_cast<std::uint64_t>(seed.stream) << 48) |
                             (seed.replication & 0xffffffffffffULL);
    ctr_[0] = 0;
    ctr_[1] = 0;
    ctr_[2] = static_cast<std::uint32_t>(hi);
    ctr_[3] = static_cast<std::uint32_t>(hi >> 32);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    if (idx_ >= 4) fill();
    const result_type lo = buf_[idx_];
    const result_type hi = buf_[idx_ + 1];
    idx_ += 2;
    return lo | (hi << 32);
  }

 private:
  void fill() {
    std::uint32_t x0 = ctr_[0], x1 = ctr_[1], x2 = ctr_[2], x3 = ctr_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * x0;
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * x2;
      const std::uint32_t y0 = static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
      const std::uint32_t y1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t y2 = static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
      const std::uint32_t y3 = static_cast<std::uint32_t>(p0);
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
    }
    buf_[0] = x0;
    buf_[1] = x1;
    buf_[2] = x2;
    buf_[3] = x3;
    if (++ctr_[0] == 0) ++ctr_[1];
    idx_ = 0;
  }

  std::uint32_t key_[2];
  std::uint32_t ctr_[4];
  std::uint32_t buf_[4];
  int idx_ = 4;
};

// Standard normals via the Marsaglia polar transform. The rejection loop
// consumes engine output deterministically, so a stream's n-th normal is a
// pure function of its seed lineage.
class GaussianStream {
 public:
  explicit GaussianStream(const SeedLineage& seed) : engine_(seed) {}

  double uniform() {
    // 53 random bits into (0,1); offset keeps 0 out of log().
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  Philox4x32 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hurstlab
