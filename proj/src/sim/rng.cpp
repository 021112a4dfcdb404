#include "dpmtl/sim.hpp"

namespace dpmtl::sim {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t agent, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t part : {run, agent, stream}) {
        s = h ^ part;
        h = splitmix64(s);
    }
    return h;
}

}  // namespace dpmtl::sim
