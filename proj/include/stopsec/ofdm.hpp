#pragma once

#include <vector>

#include "stopsec/iq.hpp"
#include "stopsec/types.hpp"

namespace stopsec {

// OFDM numerology for one transmission bandwidth. Subcarrier accounting is
// fft_size = n_data + n_pilot + n_guard + 1 (the pseudonym subcarrier, a
// repurposed guard on the inner upper band edge).
struct OfdmConfig {
    int fft_size = 64;
    int n_data = 48;
    int n_pilot = 4;
    int n_guard = 11;
    int pseudonym_subcarrier_index = 27;  // FFT bin index
    int symbols_per_packet = 100;
    int cyclic_prefix_len = 8;
    double sample_rate_hz = 2e6;
    int n_htstf_symbols = 2;

    int symbol_len() const { return fft_size + cyclic_prefix_len; }
    int preamble_len() const { return n_htstf_symbols * symbol_len(); }
    int packet_len() const { return (n_htstf_symbols + symbols_per_packet) * symbol_len(); }
    double packet_duration_s() const { return packet_len() / sample_rate_hz; }
    int bits_per_packet() const { return symbols_per_packet * n_data * 2; }

    void validate() const;

    // Table rows used throughout: 2 MHz/64, 5 MHz/128, 10 MHz/256 carriers.
    static OfdmConfig for_fft_size(int fft_size);
    static OfdmConfig for_bandwidth_hz(double bw_hz);
};

// Bin bookkeeping derived from the config: guards split across the band
// edges plus the DC null, pilots evenly spaced through the active span.
struct SubcarrierMap {
    std::vector<int> data_bins;   // FFT bin indices, ascending logical order
    std::vector<int> pilot_bins;
    std::vector<int> guard_bins;
    int pseudonym_bin = 0;

    // Extra pseudonym subcarriers (2- and 3-subcarrier configurations) are
    // the guard bins directly above the primary one.
    std::vector<int> pseudonym_bins(int count) const;
};

SubcarrierMap subcarrier_map(const OfdmConfig& cfg);

struct DataPayload {
    Bits bits;  // QPSK, two bits per data subcarrier per symbol
};

DataPayload random_payload(const OfdmConfig& cfg, uint64_t seed);

// Deterministic synchronization preamble: two OFDM symbols of seeded
// pseudo-random QPSK across the active span, cyclic prefix included.
// Never watermarked.
IqBlock build_htstf_preamble(const OfdmConfig& cfg);

// Full packet: HTSTF preamble followed by symbols_per_packet data symbols.
// The pseudonym subcarrier in symbol k carries a pure carrier of amplitude
// gain[k] * 2 (twice the unit data-subcarrier amplitude); all other bins are
// untouched by the gains.
IqBlock modulate_packet(const OfdmConfig& cfg, const DataPayload& payload,
                        const std::vector<double>& pseudonym_gain_per_symbol,
                        int n_pseudonym_subcarriers = 1);

// Pilot-equalized hard-decision QPSK demap. The block must start within one
// symbol of the true packet start; fine alignment is recovered from the
// preamble and a SyncError is thrown when that correlation is too weak.
DataPayload demodulate_packet(const OfdmConfig& cfg, const IqBlock& rx);

// Frequency-domain symbols exactly as the modulator builds them (before the
// IFFT): one vector of fft_size bins per data symbol. The watermark writes
// only the pseudonym bin(s), so every other bin is bit-identical across
// gain sequences.
std::vector<std::vector<cplx>> modulator_bins(const OfdmConfig& cfg, const DataPayload& payload,
                                              const std::vector<double>& pseudonym_gain_per_symbol,
                                              int n_pseudonym_subcarriers = 1);

// Frequency-domain view used by tests: per-symbol FFT bins of the packet
// body (preamble excluded), one vector of fft_size bins per OFDM symbol.
std::vector<std::vector<cplx>> packet_spectrum(const OfdmConfig& cfg, const IqBlock& packet);

}  // namespace stopsec
