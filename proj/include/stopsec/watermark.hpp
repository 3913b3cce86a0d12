#pragma once

#include <string>
#include <vector>

#include "stopsec/ofdm.hpp"

namespace stopsec {

// A named binary chip-amplitude code. chips_bit1 drives P-bit 1; the bit-0
// code is always the complement and is derived, never stored.
struct ChipCode {
    std::string name;
    Bits chips_bit1;
    int symbols_per_chip = 0;

    size_t length() const { return chips_bit1.size(); }
    Bits chips_bit0() const;
    const Bits& chips(int pbit) const;  // valid only for pbit 1; use chips_for()

    Bits chips_for(int pbit) const { return pbit ? chips_bit1 : chips_bit0(); }

    void validate(const OfdmConfig& cfg) const;
};

// Built-in codes: ALT10 (alternating, length 10), MSEQ10 (length-15
// m-sequence truncated to 10) and MSEQ15 (full m-sequence from x^4 + x + 1,
// seed 0001).
std::vector<ChipCode> builtin_codes();
ChipCode builtin_code(const std::string& name);

// Load codes from JSON: [{"name":..., "chips_bit1":[0,1,...], "symbols_per_chip":n}, ...]
std::vector<ChipCode> load_codes(const std::string& path);

enum class WatermarkKind {
    kStopsecSingleSubcarrier,  // coded modulation on the pseudonym subcarrier, alpha = 1
    kCmFullband,               // coded modulation across the whole packet
    kPamFullband,              // per-packet amplitude scaling baseline
};

struct WatermarkScheme {
    WatermarkKind kind = WatermarkKind::kStopsecSingleSubcarrier;
    double modulation_index = 1.0;
    ChipCode code;
    int n_pseudonym_subcarriers = 1;

    void validate() const;

    static WatermarkScheme stopsec(const ChipCode& code, int n_subcarriers = 1);
    static WatermarkScheme cm_fullband(const ChipCode& code, double alpha);
    static WatermarkScheme pam_fullband(double alpha);
};

// Per-OFDM-symbol gain sequence carrying one P-bit, length symbols_per_packet.
// Chip l spans symbols [l*spc, (l+1)*spc); its gain is 1 - A_p[l] * alpha.
// Symbols past the code get gain 1 for full-band CM and 0 (subcarrier off)
// for the single-subcarrier scheme. PAM is a constant 1 +/- alpha.
std::vector<double> gains_for_pbit(const WatermarkScheme& scheme, const OfdmConfig& cfg,
                                   int pbit);

// Watermark one packet with one P-bit. The single-subcarrier scheme routes
// the gains to the pseudonym bin(s) only; full-band schemes scale every
// post-preamble time sample by its symbol's gain. The preamble is never
// scaled.
IqBlock apply_watermark(const WatermarkScheme& scheme, const OfdmConfig& cfg,
                        const DataPayload& payload, int pbit);

}  // namespace stopsec
