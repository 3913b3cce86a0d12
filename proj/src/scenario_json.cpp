#include <fstream>

#include "stopsec/scenario.hpp"

namespace stopsec {

namespace {

using nlohmann::json;

json link_to_json(const LinkModel& link) {
    json j{{"gain_db", link.gain_db}, {"timing_offset_samples", link.timing_offset_samples},
           {"seed", link.seed}};
    switch (link.fading) {
        case FadingKind::kNone:
            j["fading"] = {{"kind", "none"}};
            break;
        case FadingKind::kSinusoidal:
            j["fading"] = {{"kind", "sinusoidal"},
                           {"rate_hz", link.fading_rate_hz},
                           {"depth_db", link.fading_depth_db}};
            break;
        case FadingKind::kRandomWalk:
            j["fading"] = {{"kind", "random_walk"},
                           {"step_db_per_symbol", link.step_db_per_symbol},
                           {"clamp_db", link.clamp_db}};
            break;
    }
    return j;
}

LinkModel link_from_json(const json& j) {
    LinkModel link;
    link.gain_db = j.value("gain_db", 0.0);
    link.timing_offset_samples = j.value("timing_offset_samples", 0L);
    link.seed = j.value("seed", uint64_t{0});
    if (j.contains("fading")) {
        const json& f = j.at("fading");
        const std::string kind = f.value("kind", "none");
        if (kind == "none") {
            link.fading = FadingKind::kNone;
        } else if (kind == "sinusoidal") {
            link.fading = FadingKind::kSinusoidal;
            link.fading_rate_hz = f.value("rate_hz", 1.0);
            link.fading_depth_db = f.value("depth_db", 1.0);
        } else if (kind == "random_walk") {
            link.fading = FadingKind::kRandomWalk;
            link.step_db_per_symbol = f.value("step_db_per_symbol", 0.05);
            link.clamp_db = f.value("clamp_db", 3.0);
        } else {
            throw std::invalid_argument("link: unknown fading kind '" + kind + "'");
        }
    }
    return link;
}

std::string kind_name(WatermarkKind kind) {
    switch (kind) {
        case WatermarkKind::kStopsecSingleSubcarrier: return "stopsec";
        case WatermarkKind::kCmFullband: return "cm_fullband";
        case WatermarkKind::kPamFullband: return "pam_fullband";
    }
    return "stopsec";
}

}  // namespace

json ScenarioConfig::to_json() const {
    json j;
    j["ofdm"] = {{"fft_size", ofdm.fft_size},
                 {"n_data", ofdm.n_data},
                 {"n_pilot", ofdm.n_pilot},
                 {"n_guard", ofdm.n_guard},
                 {"pseudonym_subcarrier_index", ofdm.pseudonym_subcarrier_index},
                 {"symbols_per_packet", ofdm.symbols_per_packet},
                 {"cyclic_prefix_len", ofdm.cyclic_prefix_len},
                 {"sample_rate_hz", ofdm.sample_rate_hz}};
    j["scheme"] = {{"kind", kind_name(scheme.kind)},
                   {"modulation_index", scheme.modulation_index},
                   {"n_pseudonym_subcarriers", scheme.n_pseudonym_subcarriers}};
    if (scheme.kind != WatermarkKind::kPamFullband) j["scheme"]["code"] = scheme.code.name;
    j["sus"] = json::array();
    for (const auto& su : sus)
        j["sus"].push_back({{"id", su.id},
                            {"snr_at_pu_db", su.snr_at_pu_db},
                            {"query_period_s", su.query_period_s},
                            {"start_time_s", su.start_time_s},
                            {"link", link_to_json(su.link)}});
    j["noise"] = {{"mode", noise.mode == NoiseMode::kSnrDb ? "snr_db" : "ebn0_db"},
                  {"value_db", noise.value_db},
                  {"seed", noise.seed}};
    j["ttl_s"] = ttl_s;
    j["sim_duration_s"] = sim_duration_s;
    j["master_seed"] = master_seed;
    j["channel_id"] = channel_id;
    j["db"] = {{"baseline_latency_s", db_baseline_latency_s},
               {"concurrency_alpha", db_concurrency_alpha}};
    j["stop_on_match"] = stop_on_match;
    j["detector_threshold_init"] = detector_threshold_init;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig cfg;
    if (j.contains("ofdm")) {
        const json& o = j.at("ofdm");
        if (o.contains("fft_size")) cfg.ofdm = OfdmConfig::for_fft_size(o.at("fft_size").get<int>());
        cfg.ofdm.n_data = o.value("n_data", cfg.ofdm.n_data);
        cfg.ofdm.n_pilot = o.value("n_pilot", cfg.ofdm.n_pilot);
        cfg.ofdm.n_guard = o.value("n_guard", cfg.ofdm.n_guard);
        cfg.ofdm.pseudonym_subcarrier_index =
            o.value("pseudonym_subcarrier_index", cfg.ofdm.pseudonym_subcarrier_index);
        cfg.ofdm.symbols_per_packet = o.value("symbols_per_packet", cfg.ofdm.symbols_per_packet);
        cfg.ofdm.cyclic_prefix_len = o.value("cyclic_prefix_len", cfg.ofdm.cyclic_prefix_len);
        cfg.ofdm.sample_rate_hz = o.value("sample_rate_hz", cfg.ofdm.sample_rate_hz);
    }
    if (j.contains("scheme")) {
        const json& s = j.at("scheme");
        const std::string kind = s.value("kind", "stopsec");
        ChipCode code;
        if (s.contains("code")) {
            if (s.at("code").is_string())
                code = builtin_code(s.at("code").get<std::string>());
            else {
                const json& c = s.at("code");
                code.name = c.value("name", "custom");
                for (const auto& v : c.at("chips_bit1"))
                    code.chips_bit1.push_back(static_cast<uint8_t>(v.get<int>() & 1));
                code.symbols_per_chip = c.at("symbols_per_chip").get<int>();
            }
        } else {
            code = builtin_code("MSEQ15");
        }
        if (kind == "stopsec")
            cfg.scheme = WatermarkScheme::stopsec(code, s.value("n_pseudonym_subcarriers", 1));
        else if (kind == "cm_fullband")
            cfg.scheme = WatermarkScheme::cm_fullband(code, s.value("modulation_index", 0.2));
        else if (kind == "pam_fullband")
            cfg.scheme = WatermarkScheme::pam_fullband(s.value("modulation_index", 0.2));
        else
            throw std::invalid_argument("scheme: unknown kind '" + kind + "'");
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        cfg.noise.mode = n.value("mode", "snr_db") == std::string("ebn0_db") ? NoiseMode::kEbn0Db
                                                                             : NoiseMode::kSnrDb;
        cfg.noise.value_db = n.value("value_db", cfg.noise.value_db);
        cfg.noise.seed = n.value("seed", cfg.noise.seed);
    }
    if (j.contains("sus")) {
        cfg.sus.clear();
        for (const auto& s : j.at("sus")) {
            SuConfig su;
            su.id = s.value("id", "su" + std::to_string(cfg.sus.size() + 1));
            su.snr_at_pu_db = s.value("snr_at_pu_db", cfg.noise.value_db);
            su.query_period_s = s.value("query_period_s", 0.05);
            su.start_time_s = s.value("start_time_s", 0.0);
            if (s.contains("link")) su.link = link_from_json(s.at("link"));
            cfg.sus.push_back(std::move(su));
        }
    }
    cfg.ttl_s = j.value("ttl_s", cfg.ttl_s);
    cfg.sim_duration_s = j.value("sim_duration_s", cfg.sim_duration_s);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.channel_id = j.value("channel_id", cfg.channel_id);
    if (j.contains("db")) {
        cfg.db_baseline_latency_s = j.at("db").value("baseline_latency_s", cfg.db_baseline_latency_s);
        cfg.db_concurrency_alpha = j.at("db").value("concurrency_alpha", cfg.db_concurrency_alpha);
    }
    cfg.stop_on_match = j.value("stop_on_match", cfg.stop_on_match);
    cfg.detector_threshold_init = j.value("detector_threshold_init", cfg.detector_threshold_init);
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("ScenarioConfig: cannot open " + path);
    json j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
    return from_json(j);
}

std::string ScenarioConfig::default_config_text() {
    return R"({
  // Closed-loop scenario: 2 MHz bandwidth, 64 subcarriers, 31.25 kHz spacing.
  "ofdm": {
    "fft_size": 64,                    // 64 | 128 | 256
    "n_data": 48,
    "n_pilot": 4,
    "n_guard": 11,                     // plus 1 pseudonym subcarrier = 64
    "pseudonym_subcarrier_index": 27,  // innermost upper-edge guard bin
    "symbols_per_packet": 100,
    "cyclic_prefix_len": 8,
    "sample_rate_hz": 2e6
  },
  "scheme": {
    "kind": "stopsec",                 // stopsec | cm_fullband | pam_fullband
    "modulation_index": 1.0,           // forced to 1.0 for stopsec
    "code": "MSEQ15",                  // ALT10 | MSEQ10 | MSEQ15 | inline object
    "n_pseudonym_subcarriers": 1       // 1..3
  },
  "sus": [
    {
      "id": "su1",
      "snr_at_pu_db": -6.0,            // received SNR against the unit noise floor
      "query_period_s": 0.05,
      "start_time_s": 0.0,
      "link": {"gain_db": 0.0, "fading": {"kind": "none"}, "timing_offset_samples": 0, "seed": 1}
    }
  ],
  "noise": {"mode": "snr_db", "value_db": -6.0, "seed": 7},
  "ttl_s": 10.0,                       // at least the longest SU query period
  "sim_duration_s": 2.0,
  "master_seed": 42,
  "channel_id": "ch0",
  "db": {"baseline_latency_s": 0.005, "concurrency_alpha": 0.01},
  "stop_on_match": true,
  "detector_threshold_init": 4.5
}
)";
}

}  // namespace stopsec
