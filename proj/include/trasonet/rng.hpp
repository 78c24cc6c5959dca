/**
 * Seeded random streams.
 *
 * The standard distributions are implementation-defined, so the few draws the
 * simulator needs are computed directly from the 64-bit engine output. This
 * keeps seeded runs byte-identical across standard libraries.
 */
#ifndef TRASONET_RNG_HPP
#define TRASONET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace trasonet
{

  inline std::uint64_t splitmix64(std::uint64_t x)
  {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /** FNV-1a, used for stream names and config hashing. */
  inline std::uint64_t fnv1a64(std::string_view bytes)
  {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes)
    {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  class Rng
  {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    /** Independent stream for a named module, derived from the run seed. */
    static Rng stream(std::uint64_t seed, std::string_view name)
    {
      return Rng(splitmix64(seed) ^ fnv1a64(name));
    }

    std::uint64_t next() { return engine_(); }

    /** Uniform in [0, 1). */
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /** Uniform integer in [0, n). */
    std::uint64_t index(std::uint64_t n)
    {
      // Lemire-style rejection keeps the draw unbiased.
      const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
      std::uint64_t v;
      do
      {
        v = engine_();
      } while (v >= limit);
      return v % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    /** Standard normal via Box-Muller (one value per call). */
    double normal()
    {
      double u1 = uniform();
      while (u1 <= 0.0)
        u1 = uniform();
      const double u2 = uniform();
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::mt19937_64 engine_;
  };

} // namespace trasonet

#endif // TRASONET_RNG_HPP
