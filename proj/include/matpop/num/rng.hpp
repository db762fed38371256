#ifndef MATPOP_NUM_RNG_HPP
#define MATPOP_NUM_RNG_HPP

#include <cstdint>
#include <random>

namespace matpop::num {

// Seeded generator with a platform-independent uniform mapping (the standard
// distributions are not bit-reproducible across implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        const double u = (eng_() >> 11) * 0x1.0p-53;  // [0,1)
        return lo + u * (hi - lo);
    }

    std::uint64_t next() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace matpop::num

#endif
