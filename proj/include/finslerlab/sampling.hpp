#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace finslerlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using Box = std::vector<Interval>;

// Seeded generator with a fixed uniform mapping, so a seed yields the same
// samples on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::vector<double> uniform(const Box& box) {
    std::vector<double> out;
    out.reserve(box.size());
    for (const auto& iv : box) out.push_back(uniform(iv.lo, iv.hi));
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

inline Box uniform_box(int dim, double lo, double hi) { return Box(static_cast<std::size_t>(dim), Interval{lo, hi}); }

}  // namespace finslerlab
