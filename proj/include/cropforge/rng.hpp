#ifndef CROPFORGE_RNG_HPP
#define CROPFORGE_RNG_HPP

#include <cstdint>
#include <random>

namespace cropforge {

// Seeded RNG with fully specified draw algorithms. std::mt19937_64 is
// pinned by the standard, but the std:: distributions are not; rolling the
// mappings here keeps datasets and checkpoints byte-identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi] inclusive. Modulo bias is irrelevant at the
  // ranges used here (spans far below 2^32).
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(engine_() % span);
  }

  bool coin(double p_true = 0.5) { return uniform() < p_true; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cropforge

#endif  // CROPFORGE_RNG_HPP
