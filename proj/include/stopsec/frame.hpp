#pragma once

#include <array>
#include <optional>

#include "stopsec/rng.hpp"
#include "stopsec/types.hpp"

namespace stopsec {

// A 26-bit random temporary identity. Values render as 7 hex digits.
struct Pseudonym {
    uint32_t value = 0;

    static constexpr uint32_t kBits = 26;
    static constexpr uint32_t kMax = (1u << kBits) - 1;

    std::string hex() const { return to_hex7(value); }
    bool operator==(const Pseudonym&) const = default;
};

// Seedable generator; one instance per owner, clone per thread.
class PseudonymGenerator {
public:
    explicit PseudonymGenerator(uint64_t seed) : rng_(seed) {}
    Pseudonym next() { return Pseudonym{static_cast<uint32_t>(rng_.bits() & Pseudonym::kMax)}; }

private:
    GaussianRng rng_;
};

// Fixed 7-chip m-sequence marking the start of every pseudonym frame.
inline constexpr std::array<uint8_t, 7> kFramePreamble{1, 1, 1, 0, 0, 1, 0};
inline constexpr size_t kFrameBits = 38;   // 7 preamble + 31 codeword
inline constexpr size_t kCodewordBits = 31;

// (31,26) Hamming code, parity bits at 1-indexed positions 1,2,4,8,16,
// message bits filled MSB-first into the remaining positions.
uint32_t hamming31_26_encode(uint32_t value);

enum class DecodeStatus {
    kOk,
    kCorrected1Bit,
    kDetected2BitUncorrectable,  // unreachable for the plain (31,26) code; see README
    kPreambleFail,
};

struct DecodeVerdict {
    DecodeStatus status = DecodeStatus::kPreambleFail;
    std::optional<Pseudonym> pseudonym;
};

DecodeVerdict hamming31_26_decode(uint32_t codeword);

// Frame layout: preamble (7 bits) followed by the Hamming codeword (31 bits),
// both MSB-first. Total length is always 38 P-bits.
Bits frame_encode(Pseudonym p);
DecodeVerdict frame_decode(const Bits& bits);

}  // namespace stopsec
