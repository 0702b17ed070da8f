// Shared basics: scalar type, reserved token ids, deterministic RNG, hashing.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpgen {

using Real = double;

// Reserved vocabulary slots. SEG is the keyphrase segmenter, serialized as ";".
enum ReservedId : int { kPad = 0, kUnk = 1, kBos = 2, kEos = 3, kSeg = 4 };
constexpr int kNumReserved = 5;

constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnkToken = "<unk>";
constexpr const char* kBosToken = "<bos>";
constexpr const char* kEosToken = "<eos>";
constexpr const char* kSegToken = ";";
constexpr const char* kDigitToken = "<digit>";

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

// Deterministic RNG. All randomness in the toolkit flows through this class so
// a run is reproducible bit-for-bit from its seed. Raw 64-bit xorshift-style
// generator with hand-rolled distributions; std:: distributions are
// implementation-defined and would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) { reseed(seed); }

  void reseed(uint64_t seed) {
    // splitmix64 seeding, avoids the all-zero state
    state_ = seed + 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 4; ++i) next_u64();
  }

  uint64_t next_u64() {
    // xorshift64* (Vigna)
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0,1)
  Real uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0,n)
  size_t uniform_int(size_t n) {
    if (n == 0) fail("Rng::uniform_int: n must be positive");
    return static_cast<size_t>(next_u64() % n);
  }

  bool bernoulli(Real p) { return uniform() < p; }

  // Fisher-Yates; not std::shuffle, whose draws are unspecified.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent stream (e.g. one per epoch) without disturbing
  // this one.
  Rng fork(uint64_t salt) const {
    return Rng(state_ ^ (salt * 0x9e3779b97f4a7c15ULL + 0x7fb5d329728ea185ULL));
  }

 private:
  uint64_t state_;
};

// FNV-1a, used for dataset/config/checkpoint content hashes in manifests.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace kpgen
