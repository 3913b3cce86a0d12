#pragma once

#include <vector>

#include "stopsec/channel.hpp"
#include "stopsec/watermark.hpp"

namespace stopsec {

struct BerPoint {
    double ebno_db = 0.0;
    double ber = 0.0;
    uint64_t n_bits = 0;
};

// Sample sizing for Monte-Carlo BER estimation: enough bits that the
// estimate hits the requested relative precision at the given confidence.
struct ConfidenceRule {
    double confidence = 0.99;
    double rel_err = 0.3;
    uint64_t max_bits = 0;  // 0: per-experiment default cap

    double z_score() const;
    uint64_t target_error_events() const;  // ceil(z^2 / rel_err^2)
};

uint64_t required_bits(double p_expected, const ConfidenceRule& rule);

// Eb/N0 convention used everywhere: energy per data bit of the host link,
// cyclic-prefix overhead excluded, so the unwatermarked QPSK curve equals
// the textbook Q(sqrt(2 Eb/N0)). noise_power_for_ebno inverts that mapping.
double noise_power_for_ebno(const OfdmConfig& cfg, double ebno_db);
double qpsk_ber_theory(double ebno_db);

enum class DataBerScheme { kUnwatermarked, kStopsec, kCmFullband, kPamFullband };

// Data-link BER over AWGN for one transmission scheme. Payloads and noise
// are seeded independently of the scheme, so schemes that do not touch the
// data bins produce bit-identical rows.
std::vector<BerPoint> measure_data_ber(const OfdmConfig& cfg, const std::vector<double>& ebno_grid,
                                       DataBerScheme scheme, double alpha, uint64_t seed,
                                       const ConfidenceRule& rule = {});

// Channel used for the watermark-robustness experiments: AWGN plus an
// optional slowly evolving Rician multipath profile (rooftop links keep a
// strong direct path; the diffuse part is what stresses a single-bin
// watermark).
struct PseudonymChannel {
    bool multipath = true;
    MultipathFadingChannel::Profile profile{};
};

// P-bit error rate (one watermark bit per packet, timing known to the
// receiver). PAM packets are decoded against a trailing-window energy
// reference, CM and single-subcarrier packets by code correlation.
std::vector<BerPoint> measure_pseudonym_ber(const OfdmConfig& cfg, const WatermarkScheme& scheme,
                                            const PseudonymChannel& channel,
                                            const std::vector<double>& ebno_grid, uint64_t seed,
                                            const ConfidenceRule& rule = {});

// Eb/N0 where a measured curve crosses the target BER (log-linear
// interpolation between grid points); NaN when the curve never crosses.
double ebno_at_ber(const std::vector<BerPoint>& curve, double target_ber);

}  // namespace stopsec
