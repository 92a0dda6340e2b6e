#ifndef CASCADE_RNG_HPP
#define CASCADE_RNG_HPP

#include <cstdint>

namespace cascade {

// Independent draw streams inside one round.
enum class Purpose : std::uint64_t {
  Clicks = 1,
  Resample = 2,
  Instance = 3,
  Model = 4,
  Test = 5,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/** \brief Counter-based stream. The key fixes the stream, the counter walks it.
 *
 *  Streams keyed by (seed, replication, round, purpose) never share state, so
 *  a replication's draws do not depend on how many others are requested.
 */
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : key_(splitmix64(key)) {}

  Stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t round, Purpose purpose)
      : Stream(derive(seed, replication, round, purpose)) {}

  static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t replication,
                                        std::uint64_t round, Purpose purpose) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ replication);
    h = splitmix64(h ^ (round * 0xd1b54a32d192ed03ULL));
    return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return splitmix64(key_ + 0x632be59bd9b4e019ULL * ++counter_); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cascade

#endif  // CASCADE_RNG_HPP
