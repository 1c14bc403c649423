#ifndef MLAS_RANDOM_HPP
#define MLAS_RANDOM_HPP

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mlas {

using RandomEngine = std::mt19937_64;

/// Seed for the stream `name` under `master_seed`, further keyed by `indices`
/// (trial index, pair id, ...). Distinct keys give statistically independent
/// streams; identical keys give identical streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name,
                          std::initializer_list<std::uint64_t> indices);

RandomEngine make_stream(std::uint64_t master_seed, std::string_view name,
                         std::initializer_list<std::uint64_t> indices);

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
std::complex<double> complex_gaussian(RandomEngine& rng, double variance);

/// Uniform phase on [0, 2*pi).
double uniform_phase(RandomEngine& rng);

}  // namespace mlas

#endif  // MLAS_RANDOM_HPP
