#include "stopsec/channel.hpp"

#include <algorithm>
#include <cmath>

namespace stopsec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }
}  // namespace

IqBlock propagate(const IqBlock& tx, const LinkModel& link) {
    require(!tx.empty(), "propagate: empty block");
    link.validate();

    IqBlock out;
    out.sample_rate_hz = tx.sample_rate_hz;
    out.origin_tag = tx.origin_tag;
    out.samples.assign(static_cast<size_t>(link.timing_offset_samples), cplx{0.0, 0.0});
    out.samples.reserve(tx.size() + static_cast<size_t>(link.timing_offset_samples));

    const double base = db_to_amp(link.gain_db);
    switch (link.fading) {
        case FadingKind::kNone:
            for (const auto& s : tx.samples) out.samples.push_back(s * base);
            break;
        case FadingKind::kSinusoidal: {
            // Envelope swings +/- depth_db around the base gain.
            const double rate = link.fading_rate_hz / tx.sample_rate_hz;
            GaussianRng rng(link.seed);
            const double phase0 = rng.uniform() * kTwoPi;
            for (size_t n = 0; n < tx.size(); ++n) {
                double env_db = link.fading_depth_db *
                                std::sin(kTwoPi * rate * static_cast<double>(n) + phase0);
                out.samples.push_back(tx.samples[n] * (base * db_to_amp(env_db)));
            }
            break;
        }
        case FadingKind::kRandomWalk: {
            GaussianRng rng(link.seed);
            double env_db = 0.0;
            double amp = base;
            const size_t step = static_cast<size_t>(std::max(1, link.envelope_step_samples));
            for (size_t n = 0; n < tx.size(); ++n) {
                if (n % step == 0 && n > 0) {
                    env_db += link.step_db_per_symbol * rng.gauss();
                    env_db = std::clamp(env_db, -link.clamp_db, link.clamp_db);
                    amp = base * db_to_amp(env_db);
                }
                out.samples.push_back(tx.samples[n] * amp);
            }
            break;
        }
    }
    return out;
}

IqBlock superpose(const std::vector<std::pair<IqBlock, size_t>>& blocks) {
    require(!blocks.empty(), "superpose: empty block list");
    size_t total = 0;
    for (const auto& [b, start] : blocks) {
        require(!b.empty(), "superpose: empty block");
        total = std::max(total, start + b.size());
    }
    IqBlock out;
    out.sample_rate_hz = blocks.front().first.sample_rate_hz;
    out.origin_tag = "superposed";
    out.samples.assign(total, cplx{0.0, 0.0});
    for (const auto& [b, start] : blocks)
        for (size_t i = 0; i < b.size(); ++i) out.samples[start + i] += b.samples[i];
    return out;
}

void add_awgn(std::vector<cplx>& samples, double noise_power, GaussianRng& rng) {
    if (noise_power <= 0.0) return;
    const double s = std::sqrt(noise_power / 2.0);
    for (auto& x : samples) x += cplx{s * rng.gauss(), s * rng.gauss()};
}

IqBlock add_noise(const IqBlock& signal, const NoiseModel& noise) {
    require(!signal.empty(), "add_noise: empty block");
    const double p_sig = mean_power(signal);
    require(p_sig > 0.0, "add_noise: degenerate input, signal power is zero");

    double snr_db = noise.value_db;
    if (noise.mode == NoiseMode::kEbn0Db) {
        require(noise.bits_per_sample_context > 0.0,
                "add_noise: Eb/N0 mode needs bits_per_sample_context");
        snr_db = noise.value_db + 10.0 * std::log10(noise.bits_per_sample_context);
    }
    const double noise_power = p_sig / std::pow(10.0, snr_db / 10.0);

    IqBlock out = signal;
    GaussianRng rng(noise.seed);
    add_awgn(out.samples, noise_power, rng);
    return out;
}

MultipathFadingChannel::MultipathFadingChannel(const Profile& profile, uint64_t seed)
    : profile_(profile), rng_(seed) {
    require(profile.n_taps >= 1, "MultipathFadingChannel: need at least one tap");
    const double k = std::pow(10.0, profile.k_factor_db / 10.0);

    // Exponential power-delay profile over taps spaced one sample apart.
    const double tap_spacing_s = 1.0 / profile.sample_rate_hz;
    const double decay = profile.rms_delay_spread_s > 0.0
                             ? std::exp(-tap_spacing_s / profile.rms_delay_spread_s)
                             : 0.0;
    std::vector<double> pdp(static_cast<size_t>(profile.n_taps));
    double acc = 0.0;
    for (size_t i = 0; i < pdp.size(); ++i) {
        pdp[i] = std::pow(decay, static_cast<double>(i));
        acc += pdp[i];
    }
    for (auto& p : pdp) p /= acc;  // total mean energy 1

    los_.resize(pdp.size());
    sigma_.resize(pdp.size());
    diffuse_.resize(pdp.size());
    // All specular energy rides on the first tap; diffuse energy follows the PDP.
    const double p_los = k / (k + 1.0);
    const double p_diffuse = 1.0 / (k + 1.0);
    for (size_t i = 0; i < pdp.size(); ++i) {
        los_[i] = i == 0 ? cplx{std::sqrt(p_los), 0.0} : cplx{0.0, 0.0};
        sigma_[i] = std::sqrt(p_diffuse * pdp[i]);
        diffuse_[i] = cplx{sigma_[i] * rng_.gauss() * std::sqrt(0.5),
                           sigma_[i] * rng_.gauss() * std::sqrt(0.5)};
    }
    taps_.resize(pdp.size());
    for (size_t i = 0; i < taps_.size(); ++i) taps_[i] = los_[i] + diffuse_[i];
}

std::vector<cplx> MultipathFadingChannel::apply(const std::vector<cplx>& x, double dt_s) {
    // Gauss-Markov evolution of the diffuse part: rho = exp(-dt / Tc).
    const double rho = profile_.coherence_time_s > 0.0
                           ? std::exp(-std::max(dt_s, 0.0) / profile_.coherence_time_s)
                           : 0.0;
    const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (size_t i = 0; i < taps_.size(); ++i) {
        cplx w{sigma_[i] * rng_.gauss() * std::sqrt(0.5),
               sigma_[i] * rng_.gauss() * std::sqrt(0.5)};
        diffuse_[i] = diffuse_[i] * rho + w * innov;
        taps_[i] = los_[i] + diffuse_[i];
    }

    std::vector<cplx> y(x.size(), cplx{0.0, 0.0});
    for (size_t t = 0; t < taps_.size(); ++t) {
        const cplx h = taps_[t];
        if (std::norm(h) == 0.0) continue;
        for (size_t n = t; n < x.size(); ++n) y[n] += h * x[n - t];
    }
    return y;
}

}  // namespace stopsec
