// Python bindings for the StopSec core: frame codec, OFDM phy, watermark
// codec, channel models, PU detector primitives, the interference store and
// the closed-loop scenario runner.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "stopsec/ber.hpp"
#include "stopsec/db.hpp"
#include "stopsec/detector.hpp"
#include "stopsec/scenario.hpp"
#include "stopsec/version.hpp"

namespace py = pybind11;
using namespace stopsec;

PYBIND11_MODULE(_stopsec, m) {
    m.doc() = "StopSec spectrum-sharing protocol simulator";
    m.attr("__version__") = kVersion;

    // ---- frame codec ----
    py::class_<Pseudonym>(m, "Pseudonym")
        .def(py::init<>())
        .def(py::init([](uint32_t v) { return Pseudonym{v}; }))
        .def_readwrite("value", &Pseudonym::value)
        .def("hex", &Pseudonym::hex)
        .def("__eq__", [](const Pseudonym& a, const Pseudonym& b) { return a == b; })
        .def("__repr__", [](const Pseudonym& p) { return "Pseudonym(0x" + p.hex() + ")"; });

    py::class_<PseudonymGenerator>(m, "PseudonymGenerator")
        .def(py::init<uint64_t>())
        .def("next", &PseudonymGenerator::next);

    py::enum_<DecodeStatus>(m, "DecodeStatus")
        .value("OK", DecodeStatus::kOk)
        .value("CORRECTED_1BIT", DecodeStatus::kCorrected1Bit)
        .value("DETECTED_2BIT_UNCORRECTABLE", DecodeStatus::kDetected2BitUncorrectable)
        .value("PREAMBLE_FAIL", DecodeStatus::kPreambleFail);

    py::class_<DecodeVerdict>(m, "DecodeVerdict")
        .def_readonly("status", &DecodeVerdict::status)
        .def_readonly("pseudonym", &DecodeVerdict::pseudonym);

    m.def("hamming31_26_encode", &hamming31_26_encode, py::arg("value"));
    m.def("hamming31_26_decode", &hamming31_26_decode, py::arg("codeword"));
    m.def("frame_encode", &frame_encode, py::arg("pseudonym"));
    m.def("frame_decode", &frame_decode, py::arg("bits"));

    // ---- ofdm phy ----
    py::class_<OfdmConfig>(m, "OfdmConfig")
        .def(py::init<>())
        .def_static("for_fft_size", &OfdmConfig::for_fft_size, py::arg("fft_size"))
        .def_static("for_bandwidth_hz", &OfdmConfig::for_bandwidth_hz, py::arg("bw_hz"))
        .def_readwrite("fft_size", &OfdmConfig::fft_size)
        .def_readwrite("n_data", &OfdmConfig::n_data)
        .def_readwrite("n_pilot", &OfdmConfig::n_pilot)
        .def_readwrite("n_guard", &OfdmConfig::n_guard)
        .def_readwrite("pseudonym_subcarrier_index", &OfdmConfig::pseudonym_subcarrier_index)
        .def_readwrite("symbols_per_packet", &OfdmConfig::symbols_per_packet)
        .def_readwrite("cyclic_prefix_len", &OfdmConfig::cyclic_prefix_len)
        .def_readwrite("sample_rate_hz", &OfdmConfig::sample_rate_hz)
        .def("packet_len", &OfdmConfig::packet_len)
        .def("packet_duration_s", &OfdmConfig::packet_duration_s)
        .def("bits_per_packet", &OfdmConfig::bits_per_packet)
        .def("validate", &OfdmConfig::validate);

    py::class_<IqBlock>(m, "IqBlock")
        .def(py::init<>())
        .def_readwrite("samples", &IqBlock::samples)
        .def_readwrite("sample_rate_hz", &IqBlock::sample_rate_hz)
        .def_readwrite("origin_tag", &IqBlock::origin_tag)
        .def("__len__", &IqBlock::size);
    m.def("mean_power", &mean_power);
    m.def("write_iq", &write_iq, py::arg("path"), py::arg("block"));
    m.def("read_iq", &read_iq, py::arg("path"));

    m.def("random_payload_bits", [](const OfdmConfig& cfg, uint64_t seed) {
        return random_payload(cfg, seed).bits;
    });
    m.def("build_htstf_preamble", &build_htstf_preamble, py::arg("cfg"));
    m.def(
        "modulate_packet",
        [](const OfdmConfig& cfg, const Bits& bits, const std::vector<double>& gains, int n_sub) {
            DataPayload payload{bits};
            return modulate_packet(cfg, payload, gains, n_sub);
        },
        py::arg("cfg"), py::arg("payload_bits"), py::arg("pseudonym_gain_per_symbol"),
        py::arg("n_pseudonym_subcarriers") = 1);
    m.def(
        "demodulate_packet",
        [](const OfdmConfig& cfg, const IqBlock& rx) { return demodulate_packet(cfg, rx).bits; },
        py::arg("cfg"), py::arg("rx"));

    // ---- watermark codec ----
    py::class_<ChipCode>(m, "ChipCode")
        .def(py::init<>())
        .def_readwrite("name", &ChipCode::name)
        .def_readwrite("chips_bit1", &ChipCode::chips_bit1)
        .def_readwrite("symbols_per_chip", &ChipCode::symbols_per_chip)
        .def("chips_bit0", &ChipCode::chips_bit0)
        .def("__len__", &ChipCode::length);
    m.def("builtin_codes", &builtin_codes);
    m.def("builtin_code", &builtin_code, py::arg("name"));
    m.def("load_codes", &load_codes, py::arg("path"));

    py::enum_<WatermarkKind>(m, "WatermarkKind")
        .value("STOPSEC_SINGLE_SUBCARRIER", WatermarkKind::kStopsecSingleSubcarrier)
        .value("CM_FULLBAND", WatermarkKind::kCmFullband)
        .value("PAM_FULLBAND", WatermarkKind::kPamFullband);

    py::class_<WatermarkScheme>(m, "WatermarkScheme")
        .def_static("stopsec", &WatermarkScheme::stopsec, py::arg("code"),
                    py::arg("n_subcarriers") = 1)
        .def_static("cm_fullband", &WatermarkScheme::cm_fullband, py::arg("code"),
                    py::arg("alpha"))
        .def_static("pam_fullband", &WatermarkScheme::pam_fullband, py::arg("alpha"))
        .def_readwrite("kind", &WatermarkScheme::kind)
        .def_readwrite("modulation_index", &WatermarkScheme::modulation_index)
        .def_readwrite("code", &WatermarkScheme::code)
        .def_readwrite("n_pseudonym_subcarriers", &WatermarkScheme::n_pseudonym_subcarriers);

    m.def("gains_for_pbit", &gains_for_pbit, py::arg("scheme"), py::arg("cfg"), py::arg("pbit"));
    m.def(
        "apply_watermark",
        [](const WatermarkScheme& scheme, const OfdmConfig& cfg, const Bits& bits, int pbit) {
            return apply_watermark(scheme, cfg, DataPayload{bits}, pbit);
        },
        py::arg("scheme"), py::arg("cfg"), py::arg("payload_bits"), py::arg("pbit"));

    // ---- channel ----
    py::enum_<FadingKind>(m, "FadingKind")
        .value("NONE", FadingKind::kNone)
        .value("SINUSOIDAL", FadingKind::kSinusoidal)
        .value("RANDOM_WALK", FadingKind::kRandomWalk);

    py::class_<LinkModel>(m, "LinkModel")
        .def(py::init<>())
        .def_readwrite("gain_db", &LinkModel::gain_db)
        .def_readwrite("fading", &LinkModel::fading)
        .def_readwrite("fading_rate_hz", &LinkModel::fading_rate_hz)
        .def_readwrite("fading_depth_db", &LinkModel::fading_depth_db)
        .def_readwrite("step_db_per_symbol", &LinkModel::step_db_per_symbol)
        .def_readwrite("clamp_db", &LinkModel::clamp_db)
        .def_readwrite("timing_offset_samples", &LinkModel::timing_offset_samples)
        .def_readwrite("seed", &LinkModel::seed);

    py::enum_<NoiseMode>(m, "NoiseMode")
        .value("SNR_DB", NoiseMode::kSnrDb)
        .value("EBN0_DB", NoiseMode::kEbn0Db);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init<>())
        .def(py::init([](NoiseMode mode, double value_db, double bits_per_sample, uint64_t seed) {
                 return NoiseModel{mode, value_db, bits_per_sample, seed};
             }),
             py::arg("mode"), py::arg("value_db"), py::arg("bits_per_sample_context") = 0.0,
             py::arg("seed") = 0)
        .def_readwrite("mode", &NoiseModel::mode)
        .def_readwrite("value_db", &NoiseModel::value_db)
        .def_readwrite("bits_per_sample_context", &NoiseModel::bits_per_sample_context)
        .def_readwrite("seed", &NoiseModel::seed);

    m.def("propagate", &propagate, py::arg("tx"), py::arg("link"));
    m.def(
        "superpose",
        [](const std::vector<std::pair<IqBlock, size_t>>& blocks) { return superpose(blocks); },
        py::arg("blocks"));
    m.def("add_noise", &add_noise, py::arg("signal"), py::arg("noise"));

    // ---- pu detector ----
    py::class_<ThresholdAdapt>(m, "ThresholdAdapt")
        .def(py::init<>())
        .def_readwrite("up_step", &ThresholdAdapt::up_step)
        .def_readwrite("down_step", &ThresholdAdapt::down_step)
        .def_readwrite("min_factor", &ThresholdAdapt::min_factor)
        .def_readwrite("max_factor", &ThresholdAdapt::max_factor);

    py::class_<DetectorConfig>(m, "DetectorConfig")
        .def(py::init<>())
        .def_readwrite("ofdm", &DetectorConfig::ofdm)
        .def_readwrite("code", &DetectorConfig::code)
        .def_readwrite("n_pseudonym_subcarriers", &DetectorConfig::n_pseudonym_subcarriers)
        .def_readwrite("threshold_factor_init", &DetectorConfig::threshold_factor_init)
        .def_readwrite("adapt", &DetectorConfig::adapt)
        .def_readwrite("channel_id", &DetectorConfig::channel_id);

    py::class_<DetectorState>(m, "DetectorState")
        .def(py::init<>())
        .def_readwrite("threshold_factor", &DetectorState::threshold_factor);

    py::class_<DetectionEvent>(m, "DetectionEvent")
        .def_readonly("packet_start_sample", &DetectionEvent::packet_start_sample)
        .def_readonly("peak_to_median", &DetectionEvent::peak_to_median);

    m.def("detect_packet_start",
          [](const IqBlock& window, const DetectorConfig& dcfg, DetectorState& state) {
              return detect_packet_start(window, dcfg, state);
          });
    m.def("extract_chip_energies", &extract_chip_energies, py::arg("rx_packet"), py::arg("dcfg"));
    m.def("decide_pbit", &decide_pbit, py::arg("energies"), py::arg("code"));
    m.def(
        "run_detector",
        [](const IqBlock& rx, const DetectorConfig& dcfg) { return run_detector(rx, dcfg); },
        py::arg("rx_stream"), py::arg("dcfg"));

    // ---- interference db ----
    py::enum_<Role>(m, "Role")
        .value("SECONDARY_USER", Role::kSecondaryUser)
        .value("PRIMARY_USER", Role::kPrimaryUser);

    py::class_<InterferenceReport>(m, "InterferenceReport")
        .def(py::init<>())
        .def(py::init([](const Pseudonym& p, double t, const std::string& ch,
                         const std::string& loc) {
                 return InterferenceReport{p, t, ch, loc};
             }),
             py::arg("pseudonym"), py::arg("timestamp_s"), py::arg("channel_id"),
             py::arg("location") = "")
        .def_readwrite("pseudonym", &InterferenceReport::pseudonym)
        .def_readwrite("timestamp_s", &InterferenceReport::timestamp_s)
        .def_readwrite("channel_id", &InterferenceReport::channel_id)
        .def_readwrite("location", &InterferenceReport::location);

    py::class_<WriteReceipt>(m, "WriteReceipt")
        .def_readonly("sequence", &WriteReceipt::sequence)
        .def_readonly("replaced_older", &WriteReceipt::replaced_older);

    py::class_<InterferenceDb>(m, "InterferenceDb")
        .def(py::init([](double ttl_s) { return new InterferenceDb(DbConfig::make(ttl_s)); }),
             py::arg("ttl_s") = 10.0)
        .def(py::init([](const std::string& journal, double ttl_s) {
                 return new InterferenceDb(journal, DbConfig::make(ttl_s));
             }),
             py::arg("journal_path"), py::arg("ttl_s"))
        .def("write_report", &InterferenceDb::write_report, py::arg("report"), py::arg("role"))
        .def("query_pseudonym", &InterferenceDb::query_pseudonym, py::arg("pseudonym"),
             py::arg("channel_id"), py::arg("now_s"), py::arg("role"))
        .def("purge_expired", &InterferenceDb::purge_expired, py::arg("now_s"))
        .def("row_count", &InterferenceDb::row_count);

    m.def("size_model_bytes", &size_model_bytes, py::arg("n_users"), py::arg("reports_per_user"),
          py::arg("report_size_bytes"));
    m.def("latency_model_s", &latency_model_s, py::arg("t_b_s"), py::arg("alpha"),
          py::arg("concurrent_users"));

    // ---- experiments ----
    py::class_<BerPoint>(m, "BerPoint")
        .def_readonly("ebno_db", &BerPoint::ebno_db)
        .def_readonly("ber", &BerPoint::ber)
        .def_readonly("n_bits", &BerPoint::n_bits);

    py::enum_<DataBerScheme>(m, "DataBerScheme")
        .value("UNWATERMARKED", DataBerScheme::kUnwatermarked)
        .value("STOPSEC", DataBerScheme::kStopsec)
        .value("CM_FULLBAND", DataBerScheme::kCmFullband)
        .value("PAM_FULLBAND", DataBerScheme::kPamFullband);

    m.def(
        "measure_data_ber",
        [](const OfdmConfig& cfg, const std::vector<double>& grid, DataBerScheme scheme,
           double alpha, uint64_t seed) { return measure_data_ber(cfg, grid, scheme, alpha, seed); },
        py::arg("cfg"), py::arg("ebno_grid_db"), py::arg("scheme"), py::arg("alpha") = 0.2,
        py::arg("seed") = 1);
    m.def("qpsk_ber_theory", &qpsk_ber_theory, py::arg("ebno_db"));

    // ---- scenario harness ----
    m.def(
        "run_scenario_json",
        [](const std::string& config_json) {
            ScenarioConfig cfg = ScenarioConfig::from_json(
                nlohmann::json::parse(config_json, nullptr, true, true));
            ScenarioResult r = run_scenario(cfg);
            nlohmann::json out{{"t_interference_start_s", r.latency.t_interference_start_s},
                               {"t_all_stopped_s", r.latency.t_all_stopped_s},
                               {"reports_written", r.latency.reports_written},
                               {"per_su_stop_times_s", r.latency.per_su_stop_times_s},
                               {"frames_transmitted", r.frames_transmitted},
                               {"frames_matched", r.frames_matched},
                               {"phantom_reports", r.phantom_reports},
                               {"stop_order", r.stop_order},
                               {"event_log", r.event_log}};
            return out.dump();
        },
        py::arg("config_json"),
        "Run one closed-loop scenario from a JSON config string; returns a JSON summary.");
    m.def("default_scenario_config", &ScenarioConfig::default_config_text);
}
