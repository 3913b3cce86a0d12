"""Smoke tests for the python bindings: one pass over each exposed surface."""

import math

import pytest

import stopsec


def test_version():
    assert stopsec.__version__


def test_hamming_and_frame_roundtrip():
    value = 0x2ABCDE1 & ((1 << 26) - 1)
    cw = stopsec.hamming31_26_encode(value)
    verdict = stopsec.hamming31_26_decode(cw)
    assert verdict.status == stopsec.DecodeStatus.OK
    assert verdict.pseudonym.value == value

    flipped = cw ^ (1 << 14)
    verdict = stopsec.hamming31_26_decode(flipped)
    assert verdict.status == stopsec.DecodeStatus.CORRECTED_1BIT
    assert verdict.pseudonym.value == value

    p = stopsec.Pseudonym(value)
    bits = stopsec.frame_encode(p)
    assert len(bits) == 38
    out = stopsec.frame_decode(bits)
    assert out.status == stopsec.DecodeStatus.OK
    assert out.pseudonym == p
    assert p.hex() == format(value, "07x")


def test_pseudonym_generator_is_seeded():
    a = stopsec.PseudonymGenerator(7)
    b = stopsec.PseudonymGenerator(7)
    for _ in range(10):
        assert a.next() == b.next()


def test_ofdm_loopback():
    cfg = stopsec.OfdmConfig.for_fft_size(64)
    cfg.validate()
    bits = stopsec.random_payload_bits(cfg, 3)
    gains = [1.0] * cfg.symbols_per_packet
    tx = stopsec.modulate_packet(cfg, bits, gains)
    assert len(tx) == cfg.packet_len()
    rx_bits = stopsec.demodulate_packet(cfg, tx)
    assert rx_bits == bits


def test_watermark_chip_roundtrip():
    cfg = stopsec.OfdmConfig.for_fft_size(64)
    code = stopsec.builtin_code("MSEQ15")
    assert len(code) == 15
    scheme = stopsec.WatermarkScheme.stopsec(code)

    dcfg = stopsec.DetectorConfig()
    dcfg.ofdm = cfg
    dcfg.code = code

    for pbit in (0, 1):
        bits = stopsec.random_payload_bits(cfg, 40 + pbit)
        pkt = stopsec.apply_watermark(scheme, cfg, bits, pbit)
        energies = stopsec.extract_chip_energies(pkt, dcfg)
        decided, score = stopsec.decide_pbit(energies, code)
        assert decided == pbit
        assert score > 0


def test_channel_snr():
    cfg = stopsec.OfdmConfig.for_fft_size(64)
    bits = stopsec.random_payload_bits(cfg, 5)
    tx = stopsec.modulate_packet(cfg, bits, [1.0] * cfg.symbols_per_packet)
    noisy = stopsec.add_noise(tx, stopsec.NoiseModel(stopsec.NoiseMode.SNR_DB, 20.0, 0.0, 9))
    p_sig = stopsec.mean_power(tx)
    p_noise = sum(abs(a - b) ** 2 for a, b in zip(noisy.samples, tx.samples)) / len(tx)
    assert abs(10 * math.log10(p_sig / p_noise) - 20.0) < 0.5


def test_detector_end_to_end():
    cfg = stopsec.OfdmConfig.for_fft_size(64)
    code = stopsec.builtin_code("MSEQ15")
    scheme = stopsec.WatermarkScheme.stopsec(code)
    p = stopsec.Pseudonym(0x155AA55)
    frame_bits = stopsec.frame_encode(p)

    stream = stopsec.IqBlock()
    stream.sample_rate_hz = cfg.sample_rate_hz
    samples = []
    for i, bit in enumerate(frame_bits):
        pkt = stopsec.apply_watermark(scheme, cfg, stopsec.random_payload_bits(cfg, 100 + i), bit)
        samples.extend(pkt.samples)
    stream.samples = samples

    dcfg = stopsec.DetectorConfig()
    dcfg.ofdm = cfg
    dcfg.code = code
    reports = stopsec.run_detector(stream, dcfg)
    assert len(reports) == 1
    assert reports[0].pseudonym == p


def test_interference_db():
    db = stopsec.InterferenceDb(ttl_s=5.0)
    p = stopsec.Pseudonym(0x0123ABC)
    report = stopsec.InterferenceReport(p, 1.0, "ch0")
    db.write_report(report, stopsec.Role.PRIMARY_USER)

    row = db.query_pseudonym(p, "ch0", 2.0, stopsec.Role.SECONDARY_USER)
    assert row is not None and row.timestamp_s == 1.0
    assert db.query_pseudonym(p, "ch0", 7.0, stopsec.Role.SECONDARY_USER) is None

    with pytest.raises(RuntimeError):
        db.write_report(report, stopsec.Role.SECONDARY_USER)

    assert stopsec.size_model_bytes(1000, 0.01, 64) == 640.0
    assert stopsec.latency_model_s(0.005, 0.1, 1) == 0.005


def test_scenario_closed_loop():
    cfg = stopsec.default_scenario()
    cfg["sus"][0]["snr_at_pu_db"] = 20.0
    cfg["sim_duration_s"] = 0.6
    out = stopsec.run_scenario(cfg)
    assert out["reports_written"] >= 1
    assert out["t_all_stopped_s"] > 0
    assert out["per_su_stop_times_s"]["su1"] == out["t_all_stopped_s"]
