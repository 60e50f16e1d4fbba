#include "gffdrift/rng.hpp"

namespace gffdrift {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Stream stream) noexcept {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(stream) * 0x8cb92ba72f3d8dd7ULL));
    return h;
}

} // namespace gffdrift
