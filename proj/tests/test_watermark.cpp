#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stopsec/watermark.hpp"

using namespace stopsec;

TEST_CASE("builtin codes match their documented shapes") {
    auto codes = builtin_codes();
    REQUIRE(codes.size() == 3);

    ChipCode alt10 = builtin_code("ALT10");
    CHECK(alt10.chips_bit1 == Bits{1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
    CHECK(alt10.symbols_per_chip == 10);

    ChipCode mseq15 = builtin_code("MSEQ15");
    CHECK(mseq15.length() == 15);
    CHECK(mseq15.symbols_per_chip == 6);
    int ones = 0;
    for (uint8_t c : mseq15.chips_bit1) ones += c;
    CHECK(ones == 8);  // balance property of a length-15 m-sequence

    ChipCode mseq10 = builtin_code("MSEQ10");
    CHECK(mseq10.length() == 10);
    CHECK(Bits(mseq15.chips_bit1.begin(), mseq15.chips_bit1.begin() + 10) == mseq10.chips_bit1);

    CHECK_THROWS_AS(builtin_code("NOPE"), std::invalid_argument);
}

TEST_CASE("mseq15 circular autocorrelation is two-valued (direct enumeration)") {
    ChipCode mseq15 = builtin_code("MSEQ15");
    const int l = 15;
    for (int lag = 0; lag < l; ++lag) {
        int acc = 0;
        for (int i = 0; i < l; ++i) {
            int a = mseq15.chips_bit1[static_cast<size_t>(i)] ? 1 : -1;
            int b = mseq15.chips_bit1[static_cast<size_t>((i + lag) % l)] ? 1 : -1;
            acc += a * b;
        }
        CHECK(acc == (lag == 0 ? 15 : -1));
    }
}

TEST_CASE("bit-0 code is the complement") {
    for (const auto& code : builtin_codes()) {
        Bits c0 = code.chips_bit0();
        REQUIRE(c0.size() == code.chips_bit1.size());
        for (size_t i = 0; i < c0.size(); ++i) CHECK(c0[i] == 1 - code.chips_bit1[i]);
    }
}

TEST_CASE("gains_for_pbit covers all three schemes") {
    OfdmConfig cfg = OfdmConfig::for_fft_size(64);

    SUBCASE("single-subcarrier: alpha 1, off-chips zero, padding off") {
        WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"));
        auto g1 = gains_for_pbit(scheme, cfg, 1);
        REQUIRE(g1.size() == 100);
        const Bits& chips = scheme.code.chips_bit1;
        for (int s = 0; s < 90; ++s)
            CHECK(g1[static_cast<size_t>(s)] ==
                  1.0 - static_cast<double>(chips[static_cast<size_t>(s / 6)]));
        for (int s = 90; s < 100; ++s) CHECK(g1[static_cast<size_t>(s)] == 0.0);  // padding

        // First chip of ALT10 is 1, so the first ten symbols carry gain 0.
        auto alt = gains_for_pbit(WatermarkScheme::stopsec(builtin_code("ALT10")), cfg, 1);
        for (int s = 0; s < 10; ++s) CHECK(alt[static_cast<size_t>(s)] == 0.0);
        for (int s = 10; s < 20; ++s) CHECK(alt[static_cast<size_t>(s)] == 1.0);
    }

    SUBCASE("swapping the pbit complements the gains on chip-covered symbols") {
        WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"));
        auto g1 = gains_for_pbit(scheme, cfg, 1);
        auto g0 = gains_for_pbit(scheme, cfg, 0);
        for (int s = 0; s < 90; ++s)
            CHECK(g0[static_cast<size_t>(s)] == 1.0 - g1[static_cast<size_t>(s)]);
    }

    SUBCASE("full-band CM: 1 - 0*alpha = 1 on zero chips, pad gain 1") {
        WatermarkScheme scheme = WatermarkScheme::cm_fullband(builtin_code("MSEQ15"), 0.2);
        auto g0 = gains_for_pbit(scheme, cfg, 0);
        const Bits c0 = scheme.code.chips_bit0();
        for (size_t l = 0; l < c0.size(); ++l) {
            double expect = c0[l] ? 0.8 : 1.0;
            CHECK(g0[l * 6] == doctest::Approx(expect));
        }
        CHECK(g0[0] == doctest::Approx(c0[0] ? 0.8 : 1.0));
        for (int s = 90; s < 100; ++s) CHECK(g0[static_cast<size_t>(s)] == 1.0);
    }

    SUBCASE("PAM: constant 1 +/- alpha") {
        WatermarkScheme scheme = WatermarkScheme::pam_fullband(0.2);
        auto g1 = gains_for_pbit(scheme, cfg, 1);
        auto g0 = gains_for_pbit(scheme, cfg, 0);
        for (double g : g1) CHECK(g == doctest::Approx(1.2));
        for (double g : g0) CHECK(g == doctest::Approx(0.8));
    }

    SUBCASE("deterministic and pure") {
        WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ10"));
        CHECK(gains_for_pbit(scheme, cfg, 1) == gains_for_pbit(scheme, cfg, 1));
    }

    SUBCASE("code too long for the packet is rejected") {
        ChipCode big{"BIG", Bits(15, 1), 8};  // 120 symbols > 100
        for (size_t i = 0; i < big.chips_bit1.size(); i += 2) big.chips_bit1[i] = 0;
        big.chips_bit1[14] = 1;
        WatermarkScheme scheme = WatermarkScheme::stopsec(big);
        CHECK_THROWS_AS(gains_for_pbit(scheme, cfg, 1), std::invalid_argument);
    }
}

TEST_CASE("stopsec watermark only touches the pseudonym bin") {
    OfdmConfig cfg = OfdmConfig::for_fft_size(64);
    SubcarrierMap map = subcarrier_map(cfg);
    DataPayload payload = random_payload(cfg, 17);
    WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"));

    IqBlock p1 = apply_watermark(scheme, cfg, payload, 1);
    IqBlock p0 = apply_watermark(scheme, cfg, payload, 0);

    auto s1 = packet_spectrum(cfg, p1);
    auto s0 = packet_spectrum(cfg, p0);
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        for (int b = 0; b < cfg.fft_size; ++b) {
            if (b == map.pseudonym_bin) continue;
            CHECK(std::abs(s1[static_cast<size_t>(s)][static_cast<size_t>(b)] -
                           s0[static_cast<size_t>(s)][static_cast<size_t>(b)]) <= 1e-9);
        }
    }
}

TEST_CASE("full-band CM scales chip samples exactly") {
    OfdmConfig cfg = OfdmConfig::for_fft_size(64);
    DataPayload payload = random_payload(cfg, 23);
    ChipCode code = builtin_code("MSEQ15");
    WatermarkScheme cm = WatermarkScheme::cm_fullband(code, 0.3);

    std::vector<double> off(static_cast<size_t>(cfg.symbols_per_packet), 0.0);
    IqBlock host = modulate_packet(cfg, payload, off);
    IqBlock marked = apply_watermark(cm, cfg, payload, 1);

    // Preamble is never scaled.
    for (int i = 0; i < cfg.preamble_len(); ++i)
        CHECK(marked.samples[static_cast<size_t>(i)] == host.samples[static_cast<size_t>(i)]);

    auto gains = gains_for_pbit(cm, cfg, 1);
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        for (int i = 0; i < cfg.symbol_len(); ++i) {
            cplx expect = host.samples[pos] * gains[static_cast<size_t>(s)];
            CHECK(std::abs(marked.samples[pos] - expect) <= 1e-12);
            ++pos;
        }
    }
    // Chips with A[l] = 1 are scaled by exactly 1 - 0.3.
    bool checked = false;
    for (size_t l = 0; l < code.length(); ++l) {
        if (!code.chips_bit1[l]) continue;
        CHECK(gains[l * 6] == doctest::Approx(0.7));
        checked = true;
    }
    CHECK(checked);
}

TEST_CASE("stopsec energy difference equals the carrier energy difference (numeric oracle)") {
    OfdmConfig cfg = OfdmConfig::for_fft_size(64);
    DataPayload payload = random_payload(cfg, 29);
    WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"));

    IqBlock p1 = apply_watermark(scheme, cfg, payload, 1);
    IqBlock p0 = apply_watermark(scheme, cfg, payload, 0);

    // Oracle: rebuild both packets as host + gain-scaled unit-carrier
    // components and account energies from the decomposition.
    std::vector<double> off(static_cast<size_t>(cfg.symbols_per_packet), 0.0);
    IqBlock host = modulate_packet(cfg, payload, off);
    auto carrier_block = [&](const std::vector<double>& gains) {
        IqBlock block = modulate_packet(cfg, payload, gains);
        for (size_t i = 0; i < block.samples.size(); ++i) block.samples[i] -= host.samples[i];
        return block;
    };
    auto g1 = gains_for_pbit(scheme, cfg, 1);
    auto g0 = gains_for_pbit(scheme, cfg, 0);
    IqBlock c1 = carrier_block(g1);
    IqBlock c0 = carrier_block(g0);

    double expected_diff = 0.0;
    for (size_t i = 0; i < host.samples.size(); ++i) {
        expected_diff += std::norm(host.samples[i] + c1.samples[i]) -
                         std::norm(host.samples[i] + c0.samples[i]);
    }
    const double measured_diff = total_energy(p1) - total_energy(p0);
    CHECK(measured_diff == doctest::Approx(expected_diff).epsilon(1e-12));

    // Carrier-only part: complementary codes differ by one chip's worth of
    // on-symbols (42 vs 48 for MSEQ15), each carrying (N+cp) * (2/N)^2.
    const double carrier_energy_diff = total_energy(c1) - total_energy(c0);
    const double e_sym = 72.0 * std::norm(cplx{2.0 / 64.0, 0.0});
    CHECK(carrier_energy_diff == doctest::Approx((42 - 48) * e_sym).epsilon(1e-9));

    // The remainder is the host-carrier cross term, nonzero only over the
    // cyclic-prefix samples; bound it by 2 * sum |host| |carrier| there.
    double cross_bound = 0.0;
    size_t pos = static_cast<size_t>(cfg.preamble_len());
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        for (int i = 0; i < cfg.cyclic_prefix_len; ++i) {
            const size_t n = pos + static_cast<size_t>(i);
            cross_bound += 2.0 * std::abs(host.samples[n]) *
                           (std::abs(c1.samples[n]) + std::abs(c0.samples[n]));
        }
        pos += static_cast<size_t>(cfg.symbol_len());
    }
    CHECK(std::abs(measured_diff - carrier_energy_diff) <= cross_bound);
}

TEST_CASE("multi-subcarrier replication drives adjacent guard bins identically") {
    OfdmConfig cfg = OfdmConfig::for_fft_size(64);
    SubcarrierMap map = subcarrier_map(cfg);
    DataPayload payload = random_payload(cfg, 31);
    WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"), 3);

    IqBlock pkt = apply_watermark(scheme, cfg, payload, 1);
    auto spec = packet_spectrum(cfg, pkt);
    auto bins = map.pseudonym_bins(3);
    REQUIRE(bins.size() == 3);
    for (int s = 0; s < cfg.symbols_per_packet; ++s) {
        const cplx v0 = spec[static_cast<size_t>(s)][static_cast<size_t>(bins[0])];
        for (int b : bins)
            CHECK(std::abs(spec[static_cast<size_t>(s)][static_cast<size_t>(b)] - v0) <= 1e-9);
    }
}

TEST_CASE("codes load from json, complement derived") {
    const std::string path = "test_codes.json";
    {
        std::ofstream f(path);
        f << R"([
  // alternating test code
  {"name": "J4", "chips_bit1": [1,0,0,1], "symbols_per_chip": 25}
])";
    }
    auto codes = load_codes(path);
    REQUIRE(codes.size() == 1);
    CHECK(codes[0].name == "J4");
    CHECK(codes[0].chips_bit1 == Bits{1, 0, 0, 1});
    CHECK(codes[0].chips_bit0() == Bits{0, 1, 1, 0});
    CHECK(codes[0].symbols_per_chip == 25);
    std::remove(path.c_str());
}

TEST_CASE("scheme validation") {
    CHECK_THROWS_AS(
        (WatermarkScheme{WatermarkKind::kStopsecSingleSubcarrier, 0.5, builtin_code("ALT10"), 1}
             .validate()),
        std::invalid_argument);
    CHECK_THROWS_AS(WatermarkScheme::pam_fullband(0.7).validate(), std::invalid_argument);
    CHECK_NOTHROW(WatermarkScheme::cm_fullband(builtin_code("MSEQ15"), 0.2).validate());
}
