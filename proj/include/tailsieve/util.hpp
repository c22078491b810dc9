#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tailsieve {

// Unrecoverable input problems (missing files, unknown ids). The CLI maps
// these to exit code 1, config/usage problems to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads a whole file into memory, throws DataError when unreadable.
std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

uint64_t splitmix64(uint64_t x);

// FNV-1a over bytes; used for output digests in run manifests where we only
// need stable equality checks, not cryptographic strength.
uint64_t fnv1a64(std::string_view bytes);
uint64_t fnv1a64_file(const std::string& path);
std::string hex64(uint64_t v);

// mt19937_64 wrapper with a rejection-sampled bounded draw so sequences do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // scramble so small seeds do not start in a low-entropy region
    state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ULL);
  }

  uint64_t next() {
    // xorshift64* keeps the generator self-contained and portable
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  // uniform integer in [0, n), n > 0
  uint64_t bounded(uint64_t n) {
    uint64_t x, r;
    do {
      x = next();
      r = x % n;
    } while (x - r > UINT64_MAX - n + 1);
    return r;
  }

  // uniform double in [0, 1)
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

// Derives an independent substream seed from a base seed and tags.
uint64_t substream_seed(uint64_t seed, uint64_t tag, uint64_t a = 0, uint64_t b = 0);

}  // namespace tailsieve
