#include "ssmc/rng.hpp"

namespace ssmc {

std::size_t Rng::index(std::size_t n) {
  // Lemire's multiply-shift with rejection; unbiased and independent of the
  // standard library's distribution implementation.
  const auto bound = static_cast<std::uint64_t>(n);
  std::uint64_t x = engine_();
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = engine_();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // master + (index+1)*golden is injective in index for a fixed master, and
  // mix64 is a bijection, so seeds are pairwise distinct.
  return mix64(master + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

}  // namespace ssmc
