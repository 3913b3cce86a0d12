#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stopsec/channel.hpp"
#include "stopsec/db.hpp"
#include "stopsec/detector.hpp"
#include "stopsec/watermark.hpp"

namespace stopsec {

struct SuConfig {
    std::string id = "su1";
    LinkModel link;
    double snr_at_pu_db = 0.0;  // received SNR against the unit noise floor
    double query_period_s = 0.05;
    double start_time_s = 0.0;
};

// Full experiment description for one closed-loop run. The noise floor is
// unit power; each SU's waveform is scaled to hit snr_at_pu_db, and the
// LinkModel applies on top of that (relative gain, fading, delay).
struct ScenarioConfig {
    OfdmConfig ofdm = OfdmConfig::for_fft_size(64);
    WatermarkScheme scheme = WatermarkScheme::stopsec(builtin_code("MSEQ15"));
    std::vector<SuConfig> sus{SuConfig{}};
    NoiseModel noise{NoiseMode::kSnrDb, -6.0, 0.0, 7};  // value: default SU SNR
    double ttl_s = 10.0;
    double sim_duration_s = 2.0;
    uint64_t master_seed = 42;
    std::string channel_id = "ch0";
    double db_baseline_latency_s = 0.005;
    double db_concurrency_alpha = 0.01;
    bool stop_on_match = true;  // detection-probability runs set this false
    double detector_threshold_init = 4.5;

    void validate() const;

    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
    static ScenarioConfig load(const std::string& path);
    static std::string default_config_text();  // commented template, Table-row defaults
};

struct LatencyRecord {
    double t_interference_start_s = 0.0;
    double t_all_stopped_s = -1.0;  // -1: not every SU stopped within the run
    std::map<std::string, double> per_su_stop_times_s;
    uint64_t reports_written = 0;

    bool all_stopped() const { return t_all_stopped_s >= 0.0; }
};

struct ScenarioResult {
    LatencyRecord latency;
    std::vector<std::string> event_log;  // JSON lines, deterministic bytes
    uint64_t frames_transmitted = 0;     // fully emitted 38-packet frames
    uint64_t frames_matched = 0;         // frames matched back by their SU
    uint64_t phantom_reports = 0;        // reports naming a never-transmitted pseudonym
    std::vector<std::string> stop_order;
};

ScenarioResult run_scenario(const ScenarioConfig& cfg);

struct LatencySweepRow {
    double snr_db = 0.0;
    double mean_latency_s = 0.0;
    double p95_latency_s = 0.0;
    double stop_rate = 0.0;
};

// Monte-Carlo latency vs SNR. The grid sets the first SU's SNR; other SUs
// keep their configured offsets relative to it. Unstopped trials contribute
// sim_duration_s (censored) and show up in stop_rate.
std::vector<LatencySweepRow> sweep_latency(const ScenarioConfig& tmpl,
                                           const std::vector<double>& snr_grid, int n_trials);

struct DetectionProbRow {
    double snr_db = 0.0;
    double p_detect = 0.0;
    int n_sus = 0;
};

// Fraction of transmitted frames that complete the whole chain: decoded by
// the PU, written to the database, and matched by the SU's query.
std::vector<DetectionProbRow> measure_detection_probability(const ScenarioConfig& tmpl,
                                                            const std::vector<double>& snr_grid,
                                                            int n_frames);

}  // namespace stopsec
