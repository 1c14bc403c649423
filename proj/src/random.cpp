#include "mlas/random.hpp"

#include <cmath>
#include <numbers>

namespace mlas {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name,
                          std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = splitmix64(master_seed ^ splitmix64(fnv1a(name)));
    for (std::uint64_t i : indices) {
        h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
    }
    return h;
}

RandomEngine make_stream(std::uint64_t master_seed, std::string_view name,
                         std::initializer_list<std::uint64_t> indices) {
    return RandomEngine(derive_seed(master_seed, name, indices));
}

std::complex<double> complex_gaussian(RandomEngine& rng, double variance) {
    if (!(variance > 0.0)) return {0.0, 0.0};
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

double uniform_phase(RandomEngine& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    return u(rng);
}

}  // namespace mlas
