#include "stopsec/watermark.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace stopsec {

Bits ChipCode::chips_bit0() const {
    Bits out(chips_bit1.size());
    for (size_t i = 0; i < chips_bit1.size(); ++i) out[i] = chips_bit1[i] ? 0 : 1;
    return out;
}

const Bits& ChipCode::chips(int pbit) const {
    require(pbit == 1, "ChipCode::chips: only the bit-1 code is stored; use chips_for()");
    return chips_bit1;
}

void ChipCode::validate(const OfdmConfig& cfg) const {
    require(!chips_bit1.empty(), "ChipCode: empty code");
    require(symbols_per_chip > 0, "ChipCode: symbols_per_chip must be positive");
    int ones = 0;
    for (uint8_t c : chips_bit1) ones += c & 1;
    int zeros = static_cast<int>(chips_bit1.size()) - ones;
    require(std::abs(ones - zeros) <= 1, "ChipCode: code must be balanced within one chip");
    require(static_cast<int>(chips_bit1.size()) * symbols_per_chip <= cfg.symbols_per_packet,
            "ChipCode: code does not fit into one packet");
}

namespace {

// Maximal-length sequence from the degree-4 LFSR x^4 + x + 1, seed 0001.
// Output is the register MSB; feedback (MSB xor LSB) shifts in at the LSB.
// This phase keeps the first 10 chips balanced, which MSEQ10 relies on.
Bits mseq15_bits() {
    Bits out;
    unsigned state = 0b0001;
    for (int i = 0; i < 15; ++i) {
        out.push_back(static_cast<uint8_t>((state >> 3) & 1u));
        unsigned fb = ((state >> 3) ^ state) & 1u;
        state = ((state << 1) | fb) & 0xFu;
    }
    return out;
}

}  // namespace

std::vector<ChipCode> builtin_codes() {
    ChipCode alt10{"ALT10", {1, 0, 1, 0, 1, 0, 1, 0, 1, 0}, 10};
    Bits m15 = mseq15_bits();
    ChipCode mseq10{"MSEQ10", Bits(m15.begin(), m15.begin() + 10), 10};
    ChipCode mseq15{"MSEQ15", m15, 6};
    return {alt10, mseq10, mseq15};
}

ChipCode builtin_code(const std::string& name) {
    for (auto& c : builtin_codes())
        if (c.name == name) return c;
    throw std::invalid_argument("builtin_code: unknown code '" + name + "'");
}

std::vector<ChipCode> load_codes(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_codes: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, true, /*ignore_comments=*/true);
    std::vector<ChipCode> out;
    for (const auto& item : j) {
        ChipCode c;
        c.name = item.at("name").get<std::string>();
        for (const auto& v : item.at("chips_bit1")) {
            int bit = v.get<int>();
            require(bit == 0 || bit == 1, "load_codes: chips must be 0/1");
            c.chips_bit1.push_back(static_cast<uint8_t>(bit));
        }
        c.symbols_per_chip = item.at("symbols_per_chip").get<int>();
        out.push_back(std::move(c));
    }
    return out;
}

void WatermarkScheme::validate() const {
    switch (kind) {
        case WatermarkKind::kStopsecSingleSubcarrier:
            require(modulation_index == 1.0,
                    "WatermarkScheme: single-subcarrier watermarking uses 100% modulation");
            require(n_pseudonym_subcarriers >= 1 && n_pseudonym_subcarriers <= 3,
                    "WatermarkScheme: 1-3 pseudonym subcarriers supported");
            break;
        case WatermarkKind::kCmFullband:
            require(modulation_index > 0.0 && modulation_index <= 1.0,
                    "WatermarkScheme: CM modulation index must be in (0,1]");
            break;
        case WatermarkKind::kPamFullband:
            require(modulation_index > 0.0 && modulation_index <= 0.5,
                    "WatermarkScheme: PAM modulation index must be in (0,0.5]");
            break;
    }
}

WatermarkScheme WatermarkScheme::stopsec(const ChipCode& code, int n_subcarriers) {
    return {WatermarkKind::kStopsecSingleSubcarrier, 1.0, code, n_subcarriers};
}

WatermarkScheme WatermarkScheme::cm_fullband(const ChipCode& code, double alpha) {
    return {WatermarkKind::kCmFullband, alpha, code, 1};
}

WatermarkScheme WatermarkScheme::pam_fullband(double alpha) {
    return {WatermarkKind::kPamFullband, alpha, ChipCode{}, 1};
}

std::vector<double> gains_for_pbit(const WatermarkScheme& scheme, const OfdmConfig& cfg,
                                   int pbit) {
    scheme.validate();
    require(pbit == 0 || pbit == 1, "gains_for_pbit: pbit must be 0 or 1");
    const size_t n_sym = static_cast<size_t>(cfg.symbols_per_packet);

    if (scheme.kind == WatermarkKind::kPamFullband) {
        double g = pbit ? 1.0 + scheme.modulation_index : 1.0 - scheme.modulation_index;
        return std::vector<double>(n_sym, g);
    }

    scheme.code.validate(cfg);
    const Bits chips = scheme.code.chips_for(pbit);
    const size_t spc = static_cast<size_t>(scheme.code.symbols_per_chip);
    const size_t covered = chips.size() * spc;
    require(covered <= n_sym, "gains_for_pbit: code longer than packet");

    const double pad = scheme.kind == WatermarkKind::kStopsecSingleSubcarrier ? 0.0 : 1.0;
    std::vector<double> gains(n_sym, pad);
    for (size_t k = 0; k < covered; ++k) {
        size_t l = k / spc;
        gains[k] = 1.0 - static_cast<double>(chips[l]) * scheme.modulation_index;
    }
    return gains;
}

IqBlock apply_watermark(const WatermarkScheme& scheme, const OfdmConfig& cfg,
                        const DataPayload& payload, int pbit) {
    const std::vector<double> gains = gains_for_pbit(scheme, cfg, pbit);

    if (scheme.kind == WatermarkKind::kStopsecSingleSubcarrier)
        return modulate_packet(cfg, payload, gains, scheme.n_pseudonym_subcarriers);

    // Full-band schemes: host packet with the pseudonym subcarrier silent,
    // then per-symbol amplitude scaling of the packet body.
    std::vector<double> off(static_cast<size_t>(cfg.symbols_per_packet), 0.0);
    IqBlock block = modulate_packet(cfg, payload, off, 1);
    const size_t sym_len = static_cast<size_t>(cfg.symbol_len());
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (size_t s = 0; s < gains.size(); ++s) {
        for (size_t i = 0; i < sym_len; ++i) block.samples[pos + i] *= gains[s];
        pos += sym_len;
    }
    return block;
}

}  // namespace stopsec
