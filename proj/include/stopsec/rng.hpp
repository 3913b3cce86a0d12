#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stopsec {

// splitmix64: used to derive independent stream seeds from a master seed,
// so every module/trial gets its own reproducible generator.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x51ab5eeded015ecULL));
}

// Deterministic N(0,1) source. Box-Muller on raw mt19937_64 output instead of
// std::normal_distribution, whose sequence differs between standard libraries.
class GaussianRng {
public:
    explicit GaussianRng(uint64_t seed) : eng_(seed) {}

    double uniform() {  // (0,1)
        return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double gauss() {
        // Marsaglia polar method: no trig, one log/sqrt per pair.
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    uint64_t bits() { return eng_(); }

    uint64_t below(uint64_t n) {  // uniform in [0, n)
        return eng_() % n;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace stopsec
