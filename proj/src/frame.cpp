#include "stopsec/frame.hpp"

namespace stopsec {

namespace {

constexpr bool is_parity_pos(uint32_t pos) { return (pos & (pos - 1)) == 0; }

// Codeword layout: 1-indexed position p lives at bit (31 - p), so that
// MSB-first serialization walks positions 1..31 in order.
constexpr uint32_t pos_mask(uint32_t pos) { return 1u << (31 - pos); }

}  // namespace

uint32_t hamming31_26_encode(uint32_t value) {
    require(value <= Pseudonym::kMax, "hamming31_26_encode: value exceeds 26 bits");
    uint32_t cw = 0;
    int next_msb = 25;
    for (uint32_t pos = 1; pos <= 31; ++pos) {
        if (is_parity_pos(pos)) continue;
        if ((value >> next_msb) & 1u) cw |= pos_mask(pos);
        --next_msb;
    }
    for (uint32_t pb = 0; pb < 5; ++pb) {
        uint32_t ppos = 1u << pb;
        uint32_t parity = 0;
        for (uint32_t pos = 1; pos <= 31; ++pos) {
            if (pos == ppos || !(pos & ppos)) continue;
            parity ^= (cw >> (31 - pos)) & 1u;
        }
        if (parity) cw |= pos_mask(ppos);
    }
    return cw;
}

static uint32_t extract_message(uint32_t cw) {
    uint32_t value = 0;
    for (uint32_t pos = 1; pos <= 31; ++pos) {
        if (is_parity_pos(pos)) continue;
        value = (value << 1) | ((cw >> (31 - pos)) & 1u);
    }
    return value;
}

DecodeVerdict hamming31_26_decode(uint32_t codeword) {
    codeword &= 0x7fffffffu;  // positions 1..31 live in bits 30..0
    uint32_t syndrome = 0;
    for (uint32_t pos = 1; pos <= 31; ++pos)
        if ((codeword >> (31 - pos)) & 1u) syndrome ^= pos;

    if (syndrome == 0)
        return {DecodeStatus::kOk, Pseudonym{extract_message(codeword)}};

    // Non-zero syndrome names the flipped position; the (31,26) code is
    // perfect, so every word decodes here. A double error lands on a wrong
    // codeword and is weeded out downstream by the pseudonym match.
    codeword ^= pos_mask(syndrome);
    return {DecodeStatus::kCorrected1Bit, Pseudonym{extract_message(codeword)}};
}

Bits frame_encode(Pseudonym p) {
    require(p.value <= Pseudonym::kMax, "frame_encode: pseudonym exceeds 26 bits");
    Bits out;
    out.reserve(kFrameBits);
    for (uint8_t b : kFramePreamble) out.push_back(b);
    uint32_t cw = hamming31_26_encode(p.value);
    for (uint32_t pos = 1; pos <= 31; ++pos)
        out.push_back(static_cast<uint8_t>((cw >> (31 - pos)) & 1u));
    return out;
}

DecodeVerdict frame_decode(const Bits& bits) {
    require(bits.size() == kFrameBits, "frame_decode: frame must be exactly 38 bits");
    for (size_t i = 0; i < kFramePreamble.size(); ++i)
        if ((bits[i] & 1u) != kFramePreamble[i])
            return {DecodeStatus::kPreambleFail, std::nullopt};
    uint32_t cw = 0;
    for (size_t i = 0; i < kCodewordBits; ++i)
        cw = (cw << 1) | (bits[kFramePreamble.size() + i] & 1u);
    return hamming31_26_decode(cw);
}

}  // namespace stopsec
