#include "bidplan/rng.hpp"

namespace bidplan {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a,
                          std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix_seed(master);
  h = mix_seed(h ^ static_cast<std::uint64_t>(stream));
  h = mix_seed(h ^ a);
  h = mix_seed(h ^ (b + 0x51ed27ULL));
  h = mix_seed(h ^ (c + 0xa24baed4ULL));
  return h;
}

}  // namespace bidplan
