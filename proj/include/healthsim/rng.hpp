#ifndef HEALTHSIM_RNG_HPP
#define HEALTHSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

#include <boost/math/special_functions/erf.hpp>

namespace healthsim {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr uint64_t hash_label(std::string_view label) {
  uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

/// Derive a child stream key from a parent key and an integer path. The
/// result depends only on the inputs, never on the order streams are used.
constexpr uint64_t derive_key(uint64_t parent, std::initializer_list<uint64_t> path) {
  uint64_t k = mix64(parent ^ 0x243F6A8885A308D3ULL);
  for (uint64_t p : path) k = mix64(k ^ mix64(p + 0x9E3779B97F4A7C15ULL));
  return k;
}

constexpr uint64_t derive_key(uint64_t parent, std::string_view label) {
  return derive_key(parent, {hash_label(label)});
}

/// Counter-based generator: output n of stream `key` is a pure function of
/// (key, n). Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = uint64_t;

  explicit constexpr CounterRng(uint64_t key, uint64_t counter = 0) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform variate on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal variate by inversion.
  double normal() {
    double u = uniform();
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
  }

  constexpr uint64_t key() const { return key_; }
  constexpr uint64_t counter() const { return counter_; }

  CounterRng substream(std::initializer_list<uint64_t> path) const { return CounterRng(derive_key(key_, path)); }
  CounterRng substream(std::string_view label) const { return CounterRng(derive_key(key_, label)); }

 private:
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace healthsim

#endif  // HEALTHSIM_RNG_HPP
