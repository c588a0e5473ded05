#include "skillgrid/rng.hpp"

#include <cmath>
#include <sstream>

#include "skillgrid/error.hpp"

namespace skillgrid {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) throw DistributionError("next_below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::next_double() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  u2 = next_double();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double twopi = 6.283185307179586476925286766559;
  spare_ = mag * std::sin(twopi * u2);
  has_spare_ = true;
  return mag * std::cos(twopi * u2);
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_;
  out << " " << (has_spare_ ? 1 : 0);
  if (has_spare_) {
    out.precision(17);
    out << " " << spare_;
  }
  return out.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  std::istringstream in(text);
  in >> rng.engine_;
  int has_spare = 0;
  in >> has_spare;
  rng.has_spare_ = has_spare != 0;
  if (rng.has_spare_) in >> rng.spare_;
  if (in.fail()) throw CheckpointError("Rng::deserialize: malformed state string");
  return rng;
}

}  // namespace skillgrid
