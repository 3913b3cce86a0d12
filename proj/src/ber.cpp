#include "stopsec/ber.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "stopsec/detector.hpp"
#include "stopsec/parallel.hpp"

namespace stopsec {

namespace {

constexpr uint64_t kPamReferenceWindow = 16;  // trailing packets forming the PAM power reference

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Mean power of the packet body (preamble excluded).
double body_power(const std::vector<cplx>& samples, const OfdmConfig& cfg) {
    const size_t start = static_cast<size_t>(cfg.preamble_len());
    double acc = 0.0;
    for (size_t i = start; i < samples.size(); ++i) acc += std::norm(samples[i]);
    return acc / static_cast<double>(samples.size() - start);
}

std::vector<double> chip_powers_fullband(const std::vector<cplx>& samples, const OfdmConfig& cfg,
                                         const ChipCode& code) {
    const size_t spc = static_cast<size_t>(code.symbols_per_chip);
    const size_t sym_len = static_cast<size_t>(cfg.symbol_len());
    std::vector<double> powers(code.length(), 0.0);
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (size_t l = 0; l < code.length(); ++l) {
        double acc = 0.0;
        for (size_t i = 0; i < spc * sym_len; ++i) acc += std::norm(samples[pos + i]);
        powers[l] = acc / static_cast<double>(spc * sym_len);
        pos += spc * sym_len;
    }
    return powers;
}

}  // namespace

double ConfidenceRule::z_score() const {
    if (confidence >= 0.995) return 2.807;
    if (confidence >= 0.99) return 2.5758293035489004;
    if (confidence >= 0.95) return 1.9599639845400545;
    return 1.6448536269514722;  // 90%
}

uint64_t ConfidenceRule::target_error_events() const {
    const double z = z_score();
    return static_cast<uint64_t>(std::ceil(z * z / (rel_err * rel_err)));
}

uint64_t required_bits(double p_expected, const ConfidenceRule& rule) {
    require(p_expected > 0.0 && p_expected < 1.0, "required_bits: p must be in (0,1)");
    const double z = rule.z_score();
    return static_cast<uint64_t>(
        std::ceil(z * z * (1.0 - p_expected) / (p_expected * rule.rel_err * rule.rel_err)));
}

double noise_power_for_ebno(const OfdmConfig& cfg, double ebno_db) {
    // Eb/N0 = 1 / (2 N sigma^2) for unit-magnitude QPSK bins.
    const double ebno = std::pow(10.0, ebno_db / 10.0);
    return 1.0 / (2.0 * static_cast<double>(cfg.fft_size) * ebno);
}

double qpsk_ber_theory(double ebno_db) {
    return q_function(std::sqrt(2.0 * std::pow(10.0, ebno_db / 10.0)));
}

std::vector<BerPoint> measure_data_ber(const OfdmConfig& cfg, const std::vector<double>& ebno_grid,
                                       DataBerScheme scheme, double alpha, uint64_t seed,
                                       const ConfidenceRule& rule) {
    if (ebno_grid.empty()) return {};
    cfg.validate();

    const uint64_t max_bits = rule.max_bits ? rule.max_bits : 40'000'000;
    const uint64_t target_events = rule.target_error_events();
    const ChipCode code = builtin_code("MSEQ15");

    std::vector<BerPoint> out(ebno_grid.size());
    parallel_for_indexed(ebno_grid.size(), [&](size_t pi) {
        const double ebno_db = ebno_grid[pi];
        const double noise_power = noise_power_for_ebno(cfg, ebno_db);

        uint64_t n_bits = 0;
        uint64_t n_errors = 0;
        const uint64_t bits_per_packet = static_cast<uint64_t>(cfg.bits_per_packet());
        uint64_t packet = 0;

        while (n_bits < max_bits && (n_errors < target_events || n_bits < 2 * bits_per_packet)) {
            // Payload, watermark bit and noise draws do not depend on the
            // scheme, so data-transparent schemes give bit-identical rows.
            const uint64_t pkt_seed = derive_seed(seed, (pi << 32) | packet);
            DataPayload payload = random_payload(cfg, pkt_seed);
            GaussianRng noise_rng(derive_seed(pkt_seed, 0xA0A0));
            const int pbit = static_cast<int>(splitmix64(pkt_seed) & 1u);

            IqBlock tx;
            switch (scheme) {
                case DataBerScheme::kUnwatermarked: {
                    std::vector<double> off(static_cast<size_t>(cfg.symbols_per_packet), 0.0);
                    tx = modulate_packet(cfg, payload, off);
                    break;
                }
                case DataBerScheme::kStopsec:
                    tx = apply_watermark(WatermarkScheme::stopsec(code), cfg, payload, pbit);
                    break;
                case DataBerScheme::kCmFullband:
                    tx = apply_watermark(WatermarkScheme::cm_fullband(code, alpha), cfg, payload,
                                         pbit);
                    break;
                case DataBerScheme::kPamFullband:
                    tx = apply_watermark(WatermarkScheme::pam_fullband(alpha), cfg, payload, pbit);
                    break;
            }
            add_awgn(tx.samples, noise_power, noise_rng);

            DataPayload rx = demodulate_packet(cfg, tx);
            for (size_t i = 0; i < payload.bits.size(); ++i)
                n_errors += static_cast<uint64_t>(rx.bits[i] != payload.bits[i]);
            n_bits += bits_per_packet;
            ++packet;
        }
        out[pi] = {ebno_db, n_bits ? static_cast<double>(n_errors) / static_cast<double>(n_bits)
                                   : 0.0,
                   n_bits};
    });
    return out;
}

std::vector<BerPoint> measure_pseudonym_ber(const OfdmConfig& cfg, const WatermarkScheme& scheme,
                                            const PseudonymChannel& channel,
                                            const std::vector<double>& ebno_grid, uint64_t seed,
                                            const ConfidenceRule& rule) {
    if (ebno_grid.empty()) return {};
    cfg.validate();
    scheme.validate();

    const uint64_t max_packets = rule.max_bits ? rule.max_bits : 400'000;
    const uint64_t target_events = rule.target_error_events();
    const uint64_t min_packets = 2'000;

    DetectorConfig dcfg;
    dcfg.ofdm = cfg;
    dcfg.code = scheme.code;
    dcfg.n_pseudonym_subcarriers = scheme.n_pseudonym_subcarriers;

    std::vector<BerPoint> out(ebno_grid.size());
    parallel_for_indexed(ebno_grid.size(), [&](size_t pi) {
        const double ebno_db = ebno_grid[pi];
        const double noise_power = noise_power_for_ebno(cfg, ebno_db);
        const double dt = cfg.packet_duration_s();

        MultipathFadingChannel::Profile profile = channel.profile;
        profile.sample_rate_hz = cfg.sample_rate_hz;
        MultipathFadingChannel fading(profile, derive_seed(seed, 0xFAD0 + pi));

        uint64_t n_packets = 0;
        uint64_t n_errors = 0;
        std::deque<double> pam_ref;

        while (n_packets < max_packets &&
               (n_errors < target_events || n_packets < min_packets)) {
            const uint64_t pkt_seed = derive_seed(seed, (pi << 32) | n_packets);
            DataPayload payload = random_payload(cfg, pkt_seed);
            GaussianRng noise_rng(derive_seed(pkt_seed, 0xB0B0));
            const int pbit = static_cast<int>(splitmix64(pkt_seed) & 1u);

            IqBlock rx = apply_watermark(scheme, cfg, payload, pbit);
            if (channel.multipath) rx.samples = fading.apply(rx.samples, dt);
            add_awgn(rx.samples, noise_power, noise_rng);

            int decided;
            if (scheme.kind == WatermarkKind::kStopsecSingleSubcarrier) {
                decided = decide_pbit(extract_chip_energies(rx, dcfg), scheme.code).first;
            } else if (scheme.kind == WatermarkKind::kCmFullband) {
                decided = decide_pbit(chip_powers_fullband(rx.samples, cfg, scheme.code),
                                      scheme.code).first;
            } else {
                const double e = body_power(rx.samples, cfg);
                if (pam_ref.size() < kPamReferenceWindow) {
                    pam_ref.push_back(e);  // warmup, not counted
                    ++n_packets;
                    continue;
                }
                double ref = 0.0;
                for (double v : pam_ref) ref += v;
                ref /= static_cast<double>(pam_ref.size());
                decided = e > ref ? 1 : 0;
                pam_ref.pop_front();
                pam_ref.push_back(e);
            }

            n_errors += static_cast<uint64_t>(decided != pbit);
            ++n_packets;
        }
        const uint64_t counted = scheme.kind == WatermarkKind::kPamFullband
                                     ? (n_packets > kPamReferenceWindow
                                            ? n_packets - kPamReferenceWindow
                                            : 0)
                                     : n_packets;
        out[pi] = {ebno_db,
                   counted ? static_cast<double>(n_errors) / static_cast<double>(counted) : 0.0,
                   counted};
    });
    return out;
}

double ebno_at_ber(const std::vector<BerPoint>& curve, double target_ber) {
    require(target_ber > 0.0, "ebno_at_ber: target must be positive");
    std::vector<BerPoint> pts = curve;
    std::sort(pts.begin(), pts.end(),
              [](const BerPoint& a, const BerPoint& b) { return a.ebno_db < b.ebno_db; });
    const double lt = std::log10(target_ber);
    for (size_t i = 1; i < pts.size(); ++i) {
        double hi = pts[i - 1].ber;
        double lo = pts[i].ber;
        if (hi < target_ber || lo > target_ber) continue;
        if (lo <= 0.0) lo = 0.5 / static_cast<double>(std::max<uint64_t>(pts[i].n_bits, 1));
        if (hi <= 0.0) continue;
        const double lh = std::log10(hi);
        const double ll = std::log10(lo);
        if (lh == ll) return pts[i - 1].ebno_db;
        const double t = (lh - lt) / (lh - ll);
        return pts[i - 1].ebno_db + t * (pts[i].ebno_db - pts[i - 1].ebno_db);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace stopsec
