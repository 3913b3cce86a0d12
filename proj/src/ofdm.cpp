#include "stopsec/ofdm.hpp"

#include <algorithm>
#include <cmath>

#include "stopsec/fft.hpp"
#include "stopsec/rng.hpp"

namespace stopsec {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

int logical_to_bin(int k, int n) { return k >= 0 ? k : k + n; }

cplx qpsk_map(uint8_t b0, uint8_t b1) {
    return {kInvSqrt2 * (b0 ? -1.0 : 1.0), kInvSqrt2 * (b1 ? -1.0 : 1.0)};
}

// Pilots are fixed BPSK, alternating across the pilot bins.
cplx pilot_value(size_t pilot_idx) { return {(pilot_idx % 2 == 0) ? 1.0 : -1.0, 0.0}; }

void append_symbol_with_cp(std::vector<cplx>& out, std::vector<cplx>& bins,
                           const Fft& plan, int cp) {
    plan.inverse(bins);
    const int n = static_cast<int>(plan.size());
    for (int i = n - cp; i < n; ++i) out.push_back(bins[i]);
    for (int i = 0; i < n; ++i) out.push_back(bins[i]);
}

}  // namespace

void OfdmConfig::validate() const {
    require(fft_size == 64 || fft_size == 128 || fft_size == 256,
            "OfdmConfig: fft_size must be 64, 128 or 256");
    require(n_data + n_pilot + n_guard + 1 == fft_size,
            "OfdmConfig: n_data + n_pilot + n_guard + 1 must equal fft_size");
    require(n_data > 0 && n_pilot > 0 && n_guard > 0, "OfdmConfig: counts must be positive");
    require((n_data + n_pilot) % 2 == 0, "OfdmConfig: active span must be even");
    require(cyclic_prefix_len > 0 && cyclic_prefix_len < fft_size, "OfdmConfig: bad cyclic prefix");
    require(symbols_per_packet > 0, "OfdmConfig: symbols_per_packet must be positive");
    require(sample_rate_hz > 0, "OfdmConfig: sample_rate_hz must be positive");
    require(n_htstf_symbols > 0, "OfdmConfig: preamble needs at least one symbol");

    SubcarrierMap map = subcarrier_map(*this);
    require(pseudonym_subcarrier_index == map.pseudonym_bin,
            "OfdmConfig: pseudonym subcarrier must be the innermost upper guard bin");
}

OfdmConfig OfdmConfig::for_fft_size(int fft) {
    OfdmConfig cfg;
    switch (fft) {
        case 64:
            cfg = {64, 48, 4, 11, 27, 100, 8, 2e6};
            break;
        case 128:
            cfg = {128, 96, 8, 23, 53, 100, 16, 5e6};
            break;
        case 256:
            cfg = {256, 192, 16, 47, 105, 100, 32, 10e6};
            break;
        default:
            throw std::invalid_argument("OfdmConfig: unsupported fft size");
    }
    return cfg;
}

OfdmConfig OfdmConfig::for_bandwidth_hz(double bw) {
    if (bw == 2e6) return for_fft_size(64);
    if (bw == 5e6) return for_fft_size(128);
    if (bw == 10e6) return for_fft_size(256);
    throw std::invalid_argument("OfdmConfig: unsupported bandwidth");
}

SubcarrierMap subcarrier_map(const OfdmConfig& cfg) {
    const int n = cfg.fft_size;
    const int n_active = cfg.n_data + cfg.n_pilot;
    const int half = n_active / 2;

    std::vector<int> active_logical;
    active_logical.reserve(n_active);
    for (int k = -half; k <= -1; ++k) active_logical.push_back(k);
    for (int k = 1; k <= half; ++k) active_logical.push_back(k);

    std::vector<size_t> pilot_slots;
    for (int i = 0; i < cfg.n_pilot; ++i)
        pilot_slots.push_back(static_cast<size_t>((2 * i + 1) * n_active / (2 * cfg.n_pilot)));

    SubcarrierMap map;
    for (size_t i = 0; i < active_logical.size(); ++i) {
        int bin = logical_to_bin(active_logical[i], n);
        if (std::find(pilot_slots.begin(), pilot_slots.end(), i) != pilot_slots.end())
            map.pilot_bins.push_back(bin);
        else
            map.data_bins.push_back(bin);
    }
    map.pseudonym_bin = logical_to_bin(half + 1, n);

    std::vector<bool> used(n, false);
    for (int b : map.data_bins) used[b] = true;
    for (int b : map.pilot_bins) used[b] = true;
    used[map.pseudonym_bin] = true;
    for (int b = 0; b < n; ++b)
        if (!used[b]) map.guard_bins.push_back(b);
    return map;
}

std::vector<int> SubcarrierMap::pseudonym_bins(int count) const {
    require(count >= 1 && count <= 3, "pseudonym_bins: supported counts are 1..3");
    std::vector<int> bins{pseudonym_bin};
    for (int i = 1; i < count; ++i) bins.push_back(pseudonym_bin + i);
    return bins;
}

DataPayload random_payload(const OfdmConfig& cfg, uint64_t seed) {
    GaussianRng rng(seed);
    DataPayload p;
    p.bits.resize(static_cast<size_t>(cfg.bits_per_packet()));
    uint64_t word = 0;
    for (size_t i = 0; i < p.bits.size(); ++i) {
        if (i % 64 == 0) word = rng.bits();
        p.bits[i] = static_cast<uint8_t>(word & 1u);
        word >>= 1;
    }
    return p;
}

IqBlock build_htstf_preamble(const OfdmConfig& cfg) {
    const SubcarrierMap map = subcarrier_map(cfg);
    const Fft& plan = fft_plan(static_cast<size_t>(cfg.fft_size));

    // Fixed seed: the preamble is a protocol constant per FFT size.
    GaussianRng rng(derive_seed(0x57055ec0ULL, static_cast<uint64_t>(cfg.fft_size)));

    IqBlock block;
    block.sample_rate_hz = cfg.sample_rate_hz;
    block.origin_tag = "htstf";
    std::vector<int> active = map.data_bins;
    active.insert(active.end(), map.pilot_bins.begin(), map.pilot_bins.end());
    std::sort(active.begin(), active.end());

    for (int s = 0; s < cfg.n_htstf_symbols; ++s) {
        std::vector<cplx> bins(static_cast<size_t>(cfg.fft_size), cplx{0.0, 0.0});
        for (int b : active) {
            uint64_t r = rng.bits();
            bins[static_cast<size_t>(b)] = qpsk_map(r & 1u, (r >> 1) & 1u);
        }
        append_symbol_with_cp(block.samples, bins, plan, cfg.cyclic_prefix_len);
    }
    return block;
}

std::vector<std::vector<cplx>> modulator_bins(const OfdmConfig& cfg, const DataPayload& payload,
                                              const std::vector<double>& pseudonym_gain_per_symbol,
                                              int n_pseudonym_subcarriers) {
    require(payload.bits.size() == static_cast<size_t>(cfg.bits_per_packet()),
            "modulate_packet: payload size mismatch");
    require(pseudonym_gain_per_symbol.size() == static_cast<size_t>(cfg.symbols_per_packet),
            "modulate_packet: gain sequence length mismatch");

    const SubcarrierMap map = subcarrier_map(cfg);
    const std::vector<int> psk_bins = map.pseudonym_bins(n_pseudonym_subcarriers);

    std::vector<std::vector<cplx>> out;
    out.reserve(static_cast<size_t>(cfg.symbols_per_packet));
    size_t bit_idx = 0;
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        std::vector<cplx> bins(static_cast<size_t>(cfg.fft_size), cplx{0.0, 0.0});
        for (int b : map.data_bins) {
            uint8_t b0 = payload.bits[bit_idx++];
            uint8_t b1 = payload.bits[bit_idx++];
            bins[static_cast<size_t>(b)] = qpsk_map(b0, b1);
        }
        for (size_t i = 0; i < map.pilot_bins.size(); ++i)
            bins[static_cast<size_t>(map.pilot_bins[i])] = pilot_value(i);
        // Carrier at twice the data-subcarrier amplitude when fully on.
        const double amp = 2.0 * pseudonym_gain_per_symbol[static_cast<size_t>(s)];
        for (int b : psk_bins) bins[static_cast<size_t>(b)] = cplx{amp, 0.0};
        out.push_back(std::move(bins));
    }
    return out;
}

IqBlock modulate_packet(const OfdmConfig& cfg, const DataPayload& payload,
                        const std::vector<double>& pseudonym_gain_per_symbol,
                        int n_pseudonym_subcarriers) {
    const Fft& plan = fft_plan(static_cast<size_t>(cfg.fft_size));

    IqBlock block = build_htstf_preamble(cfg);
    block.origin_tag = "packet";
    block.samples.reserve(static_cast<size_t>(cfg.packet_len()));

    for (auto& bins : modulator_bins(cfg, payload, pseudonym_gain_per_symbol,
                                     n_pseudonym_subcarriers))
        append_symbol_with_cp(block.samples, bins, plan, cfg.cyclic_prefix_len);
    return block;
}

std::vector<std::vector<cplx>> packet_spectrum(const OfdmConfig& cfg, const IqBlock& packet) {
    require(packet.size() >= static_cast<size_t>(cfg.packet_len()),
            "packet_spectrum: block shorter than a packet");
    const Fft& plan = fft_plan(static_cast<size_t>(cfg.fft_size));
    std::vector<std::vector<cplx>> out;
    out.reserve(static_cast<size_t>(cfg.symbols_per_packet));
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        std::vector<cplx> bins(packet.samples.begin() + static_cast<long>(pos + cfg.cyclic_prefix_len),
                               packet.samples.begin() + static_cast<long>(pos + cfg.symbol_len()));
        plan.forward(bins);
        out.push_back(std::move(bins));
        pos += static_cast<size_t>(cfg.symbol_len());
    }
    return out;
}

DataPayload demodulate_packet(const OfdmConfig& cfg, const IqBlock& rx) {
    require(!rx.empty(), "demodulate_packet: empty block");
    const IqBlock preamble = build_htstf_preamble(cfg);
    const size_t plen = preamble.size();
    require(rx.size() >= static_cast<size_t>(cfg.packet_len()),
            "demodulate_packet: block shorter than a packet");

    // Fine sync: the caller guarantees the packet starts within one symbol
    // of the block start, so search one symbol of lags.
    const size_t search = std::min(rx.size() - plen,
                                   static_cast<size_t>(cfg.symbol_len()));
    std::vector<cplx> win(rx.samples.begin(),
                          rx.samples.begin() + static_cast<long>(plen + search));
    std::vector<cplx> corr = cross_correlate(win, preamble.samples);
    size_t best = 0;
    double best_mag = 0.0;
    double mean_mag = 0.0;
    for (size_t i = 0; i < corr.size(); ++i) {
        double m = std::abs(corr[i]);
        mean_mag += m;
        if (m > best_mag) {
            best_mag = m;
            best = i;
        }
    }
    mean_mag /= static_cast<double>(corr.size());
    if (!(best_mag > 3.0 * mean_mag) || best_mag <= 0.0)
        throw SyncError("demodulate_packet: preamble correlation below threshold");
    require(rx.size() >= best + static_cast<size_t>(cfg.packet_len()),
            "demodulate_packet: packet truncated after sync");

    const SubcarrierMap map = subcarrier_map(cfg);
    const Fft& plan = fft_plan(static_cast<size_t>(cfg.fft_size));

    // Per-symbol FFTs of the packet body.
    std::vector<std::vector<cplx>> sym_bins;
    sym_bins.reserve(static_cast<size_t>(cfg.symbols_per_packet));
    size_t pos = best + static_cast<size_t>(cfg.preamble_len());
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        std::vector<cplx> bins(rx.samples.begin() + static_cast<long>(pos + cfg.cyclic_prefix_len),
                               rx.samples.begin() + static_cast<long>(pos + cfg.symbol_len()));
        plan.forward(bins);
        sym_bins.push_back(std::move(bins));
        pos += static_cast<size_t>(cfg.symbol_len());
    }

    // Single-tap LS channel estimate per pilot bin, averaged over the whole
    // packet (the channel is flat and quasi-static within a packet), then
    // linearly interpolated across the active span.
    std::vector<cplx> pilot_h(map.pilot_bins.size(), cplx{0.0, 0.0});
    for (const auto& bins : sym_bins)
        for (size_t i = 0; i < map.pilot_bins.size(); ++i)
            pilot_h[i] += bins[static_cast<size_t>(map.pilot_bins[i])] / pilot_value(i);
    for (auto& h : pilot_h) h /= static_cast<double>(cfg.symbols_per_packet);

    auto logical = [&](int bin) {
        return bin <= cfg.fft_size / 2 ? bin : bin - cfg.fft_size;
    };
    std::vector<std::pair<double, cplx>> anchors;
    for (size_t i = 0; i < map.pilot_bins.size(); ++i)
        anchors.emplace_back(static_cast<double>(logical(map.pilot_bins[i])), pilot_h[i]);
    std::sort(anchors.begin(), anchors.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    auto channel_at = [&](int bin) -> cplx {
        double x = static_cast<double>(logical(bin));
        if (x <= anchors.front().first) return anchors.front().second;
        if (x >= anchors.back().first) return anchors.back().second;
        for (size_t i = 1; i < anchors.size(); ++i) {
            if (x <= anchors[i].first) {
                double t = (x - anchors[i - 1].first) / (anchors[i].first - anchors[i - 1].first);
                return anchors[i - 1].second * (1.0 - t) + anchors[i].second * t;
            }
        }
        return anchors.back().second;
    };

    DataPayload out;
    out.bits.reserve(static_cast<size_t>(cfg.bits_per_packet()));
    for (const auto& bins : sym_bins) {
        for (int b : map.data_bins) {
            cplx h = channel_at(b);
            cplx y = bins[static_cast<size_t>(b)];
            cplx x = std::norm(h) > 1e-30 ? y / h : y;
            out.bits.push_back(static_cast<uint8_t>(x.real() < 0.0));
            out.bits.push_back(static_cast<uint8_t>(x.imag() < 0.0));
        }
    }
    return out;
}

}  // namespace stopsec
