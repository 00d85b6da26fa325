#pragma once

#include "mpflow/geometry.hpp"

#include <cstdint>
#include <vector>

namespace mpflow {

// splitmix64; the uniform draws use the top 53 bits so streams are
// identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

// Rejection samples from bbox with rho(x) > margin.
std::vector<Vec> sample_interior(const ChartDomain& domain, int count, std::uint64_t seed,
                                 double margin = 1e-3);

// Random boundary points, uniform in the boundary parameters.
std::vector<Vec> sample_boundary(const ChartDomain& domain, int count, std::uint64_t seed);

}  // namespace mpflow
