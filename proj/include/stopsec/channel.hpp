#pragma once

#include <vector>

#include "stopsec/iq.hpp"
#include "stopsec/rng.hpp"

namespace stopsec {

enum class FadingKind { kNone, kSinusoidal, kRandomWalk };

// Per-link propagation model: flat gain, optional slow amplitude fading and
// an integer-sample timing offset.
struct LinkModel {
    double gain_db = 0.0;
    FadingKind fading = FadingKind::kNone;
    double fading_rate_hz = 0.0;       // sinusoidal
    double fading_depth_db = 0.0;      // sinusoidal: envelope swings +/- depth_db
    double step_db_per_symbol = 0.0;   // random walk
    double clamp_db = 0.0;             // random walk bound
    int envelope_step_samples = 72;    // random walk update interval (one OFDM symbol)
    long timing_offset_samples = 0;
    uint64_t seed = 0;

    void validate() const {
        require(fading_depth_db >= 0.0, "LinkModel: fading depth must be >= 0");
        require(clamp_db >= 0.0, "LinkModel: clamp must be >= 0");
        require(timing_offset_samples >= 0, "LinkModel: negative delay unsupported");
    }
};

enum class NoiseMode { kSnrDb, kEbn0Db };

struct NoiseModel {
    NoiseMode mode = NoiseMode::kSnrDb;
    double value_db = 0.0;
    double bits_per_sample_context = 0.0;  // Eb/N0 mode: data bits per complex sample
    uint64_t seed = 0;
};

// Gain, fading envelope and delay. Output length = input length + delay.
IqBlock propagate(const IqBlock& tx, const LinkModel& link);

// Sample-wise complex sum of blocks placed on a common timeline.
IqBlock superpose(const std::vector<std::pair<IqBlock, size_t>>& blocks);

// Circular complex AWGN sized from the measured power of `signal` so that
// signal-power / noise-power hits the target. Throws on zero-power input.
IqBlock add_noise(const IqBlock& signal, const NoiseModel& noise);

// Low-level path used by the experiment harnesses: fixed noise power,
// independent of the instantaneous signal content.
void add_awgn(std::vector<cplx>& samples, double noise_power, GaussianRng& rng);

// Block-fading multipath channel: a handful of exponentially decaying taps
// with a dominant direct component (Rician K factor). Tap weights evolve
// slowly between packets (Gauss-Markov with the given coherence time), so
// consecutive packets see correlated channels. Delay support stays within
// one cyclic prefix. Mean tap energy is normalized to one.
class MultipathFadingChannel {
public:
    struct Profile {
        double k_factor_db = 8.0;
        double rms_delay_spread_s = 0.4e-6;
        int n_taps = 4;
        double coherence_time_s = 0.08;
        double sample_rate_hz = 2e6;
    };

    MultipathFadingChannel(const Profile& profile, uint64_t seed);

    // Advance the channel state by dt and convolve (linear FIR).
    std::vector<cplx> apply(const std::vector<cplx>& x, double dt_s);

    int n_taps() const { return static_cast<int>(taps_.size()); }

private:
    Profile profile_;
    std::vector<cplx> los_;      // fixed specular part per tap
    std::vector<double> sigma_;  // diffuse std per tap
    std::vector<cplx> taps_;     // current realization
    std::vector<cplx> diffuse_;
    GaussianRng rng_;
};

}  // namespace stopsec
