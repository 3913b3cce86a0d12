#include "stopsec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "stopsec/parallel.hpp"

namespace stopsec {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

// Slow amplitude envelope of one link, continuous across packets.
class EnvelopeProcess {
public:
    EnvelopeProcess(const LinkModel& link, double sample_rate_hz, int symbol_len)
        : link_(link), rate_(sample_rate_hz), symbol_len_(symbol_len), rng_(link.seed) {
        if (link_.fading == FadingKind::kSinusoidal) phase0_ = rng_.uniform() * 6.283185307179586;
    }

    // Amplitude scale for the symbol starting at absolute sample n.
    double amp_at(uint64_t n) {
        switch (link_.fading) {
            case FadingKind::kNone:
                return 1.0;
            case FadingKind::kSinusoidal: {
                double t = static_cast<double>(n) / rate_;
                double env_db =
                    link_.fading_depth_db * std::sin(6.283185307179586 * link_.fading_rate_hz * t +
                                                     phase0_);
                return db_to_amp(env_db);
            }
            case FadingKind::kRandomWalk: {
                uint64_t step = n / static_cast<uint64_t>(symbol_len_);
                while (steps_done_ < step) {
                    env_db_ += link_.step_db_per_symbol * rng_.gauss();
                    env_db_ = std::clamp(env_db_, -link_.clamp_db, link_.clamp_db);
                    ++steps_done_;
                }
                return db_to_amp(env_db_);
            }
        }
        return 1.0;
    }

private:
    LinkModel link_;
    double rate_;
    int symbol_len_;
    GaussianRng rng_;
    double phase0_ = 0.0;
    double env_db_ = 0.0;
    uint64_t steps_done_ = 0;
};

struct PseudonymUse {
    Pseudonym pseudonym;
    double t_start_s = 0.0;
    double t_end_s = 0.0;
    bool matched = false;
    bool frame_completed = false;
};

struct SuRuntime {
    SuConfig cfg;
    size_t index = 0;
    double base_amp = 1.0;
    uint64_t grid_start = 0;  // absolute sample of packet 0
    PseudonymGenerator pgen{0};
    EnvelopeProcess envelope;
    Bits frame_bits;
    uint64_t next_packet = 0;
    std::optional<uint64_t> stop_tick;
    double next_query_s = 0.0;
    std::vector<PseudonymUse> log;

    std::vector<cplx> cur_packet;
    uint64_t cur_packet_start = 0;
    bool cur_valid = false;

    SuRuntime(const SuConfig& c, EnvelopeProcess env) : cfg(c), envelope(std::move(env)) {}
};

struct PendingWrite {
    double complete_t_s = 0.0;
    InterferenceReport report;
};

}  // namespace

void ScenarioConfig::validate() const {
    ofdm.validate();
    scheme.validate();
    require(!sus.empty(), "ScenarioConfig: at least one SU required");
    require(sim_duration_s > 0, "ScenarioConfig: duration must be positive");
    require(ttl_s > 0, "ScenarioConfig: TTL must be positive");
    for (const auto& su : sus) {
        require(su.query_period_s > 0, "ScenarioConfig: query period must be positive");
        require(su.query_period_s <= ttl_s,
                "ScenarioConfig: query period must not exceed the TTL");
        su.link.validate();
    }
    require(db_baseline_latency_s >= 0 && db_concurrency_alpha >= 0,
            "ScenarioConfig: DB latency model parameters must be non-negative");
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult result;
    auto log_event = [&result](const std::string& line) { result.event_log.push_back(line); };

    const OfdmConfig& ofdm = cfg.ofdm;
    const double rate = ofdm.sample_rate_hz;
    const size_t packet_len = static_cast<size_t>(ofdm.packet_len());
    const uint64_t total_samples = static_cast<uint64_t>(cfg.sim_duration_s * rate);

    // Reference power of one watermarked packet at unit scale; SU amplitude
    // is chosen so received power / unit noise = snr_at_pu_db.
    double p_ref;
    {
        DataPayload ref_payload = random_payload(ofdm, derive_seed(cfg.master_seed, 0x12EF));
        IqBlock b1 = apply_watermark(cfg.scheme, ofdm, ref_payload, 1);
        IqBlock b0 = apply_watermark(cfg.scheme, ofdm, ref_payload, 0);
        p_ref = 0.5 * (mean_power(b1) + mean_power(b0));
    }

    InterferenceDb db(DbConfig::make(cfg.ttl_s, cfg.db_baseline_latency_s, cfg.db_concurrency_alpha));

    DetectorConfig dcfg;
    dcfg.ofdm = ofdm;
    dcfg.code = cfg.scheme.code;
    dcfg.n_pseudonym_subcarriers = cfg.scheme.n_pseudonym_subcarriers;
    dcfg.threshold_factor_init = cfg.detector_threshold_init;
    dcfg.channel_id = cfg.channel_id;
    PuDetector detector(dcfg);

    std::vector<PendingWrite> pending_writes;
    const double n_users = static_cast<double>(cfg.sus.size());
    const double write_latency =
        latency_model_s(cfg.db_baseline_latency_s, cfg.db_concurrency_alpha, n_users);
    const double read_latency = write_latency;

    detector.set_sink([&](const InterferenceReport& r) {
        pending_writes.push_back({r.timestamp_s + write_latency, r});
        return true;
    });

    std::vector<SuRuntime> sus;
    sus.reserve(cfg.sus.size());
    for (size_t i = 0; i < cfg.sus.size(); ++i) {
        const SuConfig& sc = cfg.sus[i];
        SuRuntime su(sc, EnvelopeProcess(sc.link, rate, ofdm.symbol_len()));
        su.index = i;
        su.base_amp = std::sqrt(std::pow(10.0, sc.snr_at_pu_db / 10.0) / p_ref) *
                      db_to_amp(sc.link.gain_db);
        su.grid_start = static_cast<uint64_t>(sc.start_time_s * rate) +
                        static_cast<uint64_t>(sc.link.timing_offset_samples);
        su.pgen = PseudonymGenerator(derive_seed(cfg.master_seed, 0x50 + i));
        su.next_query_s = sc.start_time_s + sc.query_period_s;
        sus.push_back(std::move(su));
        log_event("{\"ev\":\"su_start\",\"su\":\"" + sc.id +
                  "\",\"t\":" + fmt_double(sc.start_time_s) +
                  ",\"snr_db\":" + fmt_double(sc.snr_at_pu_db) + "}");
    }

    result.latency.t_interference_start_s =
        static_cast<double>(std::min_element(sus.begin(), sus.end(),
                                             [](const SuRuntime& a, const SuRuntime& b) {
                                                 return a.grid_start < b.grid_start;
                                             })
                                ->grid_start) /
        rate;

    GaussianRng noise_rng(derive_seed(cfg.master_seed, 0xA015E ^ cfg.noise.seed));

    // Builds (or reuses) the SU's packet `idx` waveform at unit link gain.
    auto build_packet = [&](SuRuntime& su, uint64_t idx) {
        if (su.cur_valid && su.cur_packet_start == su.grid_start + idx * packet_len) return;
        if (idx % kFrameBits == 0) {
            // Frame boundary: self-generate a fresh pseudonym and log its use.
            if (!su.log.empty()) su.log.back().t_end_s =
                static_cast<double>(su.grid_start + idx * packet_len) / rate;
            Pseudonym p = su.pgen.next();
            su.frame_bits = frame_encode(p);
            su.log.push_back({p, static_cast<double>(su.grid_start + idx * packet_len) / rate,
                              static_cast<double>(su.grid_start + idx * packet_len) / rate, false,
                              false});
            log_event("{\"ev\":\"frame_start\",\"su\":\"" + su.cfg.id + "\",\"t\":" +
                      fmt_double(static_cast<double>(su.grid_start + idx * packet_len) / rate) +
                      ",\"pseudonym\":\"" + p.hex() + "\"}");
        }
        const int pbit = su.frame_bits.empty() ? 0 : su.frame_bits[idx % kFrameBits];
        DataPayload payload =
            random_payload(ofdm, derive_seed(cfg.master_seed, (su.index << 40) ^ idx));
        IqBlock block = apply_watermark(cfg.scheme, ofdm, payload, pbit);
        // Per-symbol envelope on top of the base amplitude.
        const size_t sym_len = static_cast<size_t>(ofdm.symbol_len());
        const uint64_t start_abs = su.grid_start + idx * packet_len;
        for (size_t s = 0; s * sym_len < block.samples.size(); ++s) {
            const double amp = su.base_amp * su.envelope.amp_at(start_abs + s * sym_len);
            for (size_t i = s * sym_len; i < std::min((s + 1) * sym_len, block.samples.size());
                 ++i)
                block.samples[i] *= amp;
        }
        su.cur_packet = std::move(block.samples);
        su.cur_packet_start = start_abs;
        su.cur_valid = true;
    };

    // Renders an SU's contribution into [chunk_start, chunk_end).
    auto render_su = [&](SuRuntime& su, std::vector<cplx>& buf, uint64_t chunk_start,
                         uint64_t chunk_end) {
        if (su.stop_tick && *su.stop_tick <= chunk_start) return;
        uint64_t limit = chunk_end;
        if (su.stop_tick) limit = std::min<uint64_t>(limit, *su.stop_tick);
        if (limit <= chunk_start) return;
        if (su.grid_start >= limit) return;

        uint64_t first_pkt = chunk_start > su.grid_start
                                 ? (chunk_start - su.grid_start) / packet_len
                                 : 0;
        for (uint64_t idx = first_pkt;; ++idx) {
            const uint64_t pkt_start = su.grid_start + idx * packet_len;
            if (pkt_start >= limit) break;
            const uint64_t pkt_end = pkt_start + packet_len;
            if (pkt_end <= chunk_start) continue;
            build_packet(su, idx);
            const uint64_t lo = std::max(pkt_start, chunk_start);
            const uint64_t hi = std::min({pkt_end, limit});
            for (uint64_t n = lo; n < hi; ++n)
                buf[n - chunk_start] += su.cur_packet[n - pkt_start];
            if (hi == pkt_end) {
                su.next_packet = idx + 1;
                if (!su.log.empty()) {
                    su.log.back().t_end_s = static_cast<double>(pkt_end) / rate;
                    if (idx % kFrameBits == kFrameBits - 1) {
                        su.log.back().frame_completed = true;
                        ++result.frames_transmitted;
                    }
                }
            }
        }
    };

    auto pseudonym_was_transmitted = [&](const InterferenceReport& r) {
        for (const auto& su : sus)
            for (const auto& use : su.log)
                if (use.pseudonym == r.pseudonym && r.timestamp_s >= use.t_start_s &&
                    r.timestamp_s <= use.t_end_s + cfg.ttl_s)
                    return true;
        return false;
    };

    // Applies every due write completion and SU query up to t_now, in time
    // order (writes ahead of queries at equal instants).
    auto process_events = [&](double t_now) {
        while (true) {
            double next_write = 1e300;
            size_t write_idx = pending_writes.size();
            for (size_t i = 0; i < pending_writes.size(); ++i) {
                if (pending_writes[i].complete_t_s < next_write) {
                    next_write = pending_writes[i].complete_t_s;
                    write_idx = i;
                }
            }
            double next_query = 1e300;
            size_t query_su = sus.size();
            for (size_t i = 0; i < sus.size(); ++i) {
                if (sus[i].stop_tick) continue;
                if (sus[i].next_query_s < next_query) {
                    next_query = sus[i].next_query_s;
                    query_su = i;
                }
            }

            if (next_write <= next_query && next_write <= t_now && write_idx < pending_writes.size()) {
                InterferenceReport r = pending_writes[write_idx].report;
                pending_writes.erase(pending_writes.begin() + static_cast<long>(write_idx));
                db.write_report(r, Role::kPrimaryUser);
                ++result.latency.reports_written;
                if (!pseudonym_was_transmitted(r)) ++result.phantom_reports;
                log_event("{\"ev\":\"report\",\"t\":" + fmt_double(next_write) +
                          ",\"pseudonym\":\"" + r.pseudonym.hex() + "\",\"detected_t\":" +
                          fmt_double(r.timestamp_s) + "}");
                continue;
            }
            if (next_query <= t_now && query_su < sus.size()) {
                SuRuntime& su = sus[query_su];
                const double t_q = su.next_query_s;
                su.next_query_s += su.cfg.query_period_s;
                bool matched = false;
                std::string matched_hex;
                for (auto& use : su.log) {
                    if (t_q < use.t_start_s || t_q > use.t_end_s + cfg.ttl_s) continue;
                    auto row = db.query_pseudonym(use.pseudonym, cfg.channel_id, t_q,
                                                  Role::kSecondaryUser);
                    if (row && row->timestamp_s >= use.t_start_s &&
                        row->timestamp_s <= use.t_end_s + cfg.ttl_s) {
                        matched = true;
                        matched_hex = use.pseudonym.hex();
                        use.matched = true;
                    }
                }
                log_event("{\"ev\":\"query\",\"su\":\"" + su.cfg.id + "\",\"t\":" +
                          fmt_double(t_q) + ",\"matched\":" + (matched ? "true" : "false") +
                          (matched ? ",\"pseudonym\":\"" + matched_hex + "\"" : "") + "}");
                if (matched && cfg.stop_on_match && !su.stop_tick) {
                    su.stop_tick = static_cast<uint64_t>((t_q + read_latency) * rate);
                    const double t_stop = static_cast<double>(*su.stop_tick) / rate;
                    result.latency.per_su_stop_times_s[su.cfg.id] = t_stop;
                    result.stop_order.push_back(su.cfg.id);
                    log_event("{\"ev\":\"stop\",\"su\":\"" + su.cfg.id +
                              "\",\"t\":" + fmt_double(t_stop) + "}");
                }
                continue;
            }
            break;
        }
    };

    const size_t chunk = packet_len;
    std::vector<cplx> buf;
    for (uint64_t chunk_start = 0; chunk_start < total_samples; chunk_start += chunk) {
        const uint64_t chunk_end = std::min<uint64_t>(chunk_start + chunk, total_samples);
        buf.assign(chunk_end - chunk_start, cplx{0.0, 0.0});
        for (auto& su : sus) render_su(su, buf, chunk_start, chunk_end);
        add_awgn(buf, 1.0, noise_rng);
        detector.feed(buf);
        process_events(static_cast<double>(chunk_end) / rate);

        if (cfg.stop_on_match) {
            bool all_stopped = true;
            for (const auto& su : sus)
                if (!su.stop_tick) all_stopped = false;
            if (all_stopped && pending_writes.empty()) break;
        }
    }
    detector.flush();
    process_events(cfg.sim_duration_s);

    bool all_stopped = true;
    double last_stop = 0.0;
    for (const auto& su : sus) {
        if (!su.stop_tick) {
            all_stopped = false;
        } else {
            last_stop = std::max(last_stop, static_cast<double>(*su.stop_tick) / rate);
        }
    }
    if (all_stopped && !sus.empty()) result.latency.t_all_stopped_s = last_stop;
    for (const auto& su : sus)
        for (const auto& use : su.log)
            if (use.frame_completed && use.matched) ++result.frames_matched;

    log_event("{\"ev\":\"end\",\"t\":" + fmt_double(cfg.sim_duration_s) + ",\"reports\":" +
              std::to_string(result.latency.reports_written) + ",\"all_stopped\":" +
              (all_stopped ? "true" : "false") + "}");
    return result;
}

std::vector<LatencySweepRow> sweep_latency(const ScenarioConfig& tmpl,
                                           const std::vector<double>& snr_grid, int n_trials) {
    require(!snr_grid.empty(), "sweep_latency: empty grid");
    require(n_trials > 0, "sweep_latency: trials must be positive");

    struct TrialOut {
        double latency = 0.0;
        bool stopped = false;
    };
    std::vector<LatencySweepRow> rows(snr_grid.size());
    const double base_snr = tmpl.sus.front().snr_at_pu_db;

    std::vector<TrialOut> trials(snr_grid.size() * static_cast<size_t>(n_trials));
    parallel_for_indexed(trials.size(), [&](size_t k) {
        const size_t pi = k / static_cast<size_t>(n_trials);
        const size_t trial = k % static_cast<size_t>(n_trials);
        ScenarioConfig cfg = tmpl;
        for (auto& su : cfg.sus)
            su.snr_at_pu_db = snr_grid[pi] + (su.snr_at_pu_db - base_snr);
        cfg.master_seed = derive_seed(tmpl.master_seed, (pi << 24) ^ trial);
        ScenarioResult r = run_scenario(cfg);
        TrialOut out;
        out.stopped = r.latency.all_stopped();
        out.latency = out.stopped
                          ? r.latency.t_all_stopped_s - r.latency.t_interference_start_s
                          : cfg.sim_duration_s;
        trials[k] = out;
    });

    for (size_t pi = 0; pi < snr_grid.size(); ++pi) {
        std::vector<double> lat;
        int stopped = 0;
        for (int t = 0; t < n_trials; ++t) {
            const TrialOut& out = trials[pi * static_cast<size_t>(n_trials) +
                                         static_cast<size_t>(t)];
            lat.push_back(out.latency);
            stopped += out.stopped ? 1 : 0;
        }
        std::sort(lat.begin(), lat.end());
        double mean = 0.0;
        for (double v : lat) mean += v;
        mean /= static_cast<double>(lat.size());
        const size_t p95_idx = static_cast<size_t>(
            std::ceil(0.95 * static_cast<double>(lat.size() - 1)));
        rows[pi] = {snr_grid[pi], mean, lat[p95_idx],
                    static_cast<double>(stopped) / static_cast<double>(n_trials)};
    }
    return rows;
}

std::vector<DetectionProbRow> measure_detection_probability(const ScenarioConfig& tmpl,
                                                            const std::vector<double>& snr_grid,
                                                            int n_frames) {
    require(!snr_grid.empty(), "measure_detection_probability: empty grid");
    require(n_frames >= 1, "measure_detection_probability: need at least one frame");

    const double base_snr = tmpl.sus.front().snr_at_pu_db;
    std::vector<DetectionProbRow> rows(snr_grid.size());
    parallel_for_indexed(snr_grid.size(), [&](size_t pi) {
        ScenarioConfig cfg = tmpl;
        cfg.stop_on_match = false;
        for (auto& su : cfg.sus)
            su.snr_at_pu_db = snr_grid[pi] + (su.snr_at_pu_db - base_snr);
        const double frame_s = cfg.ofdm.packet_duration_s() * static_cast<double>(kFrameBits);
        cfg.sim_duration_s = frame_s * static_cast<double>(n_frames) + 4 * cfg.sus.front().query_period_s;
        cfg.master_seed = derive_seed(tmpl.master_seed, 0xDE7EC7 + pi);
        ScenarioResult r = run_scenario(cfg);
        rows[pi] = {snr_grid[pi],
                    r.frames_transmitted
                        ? static_cast<double>(r.frames_matched) /
                              static_cast<double>(r.frames_transmitted)
                        : 0.0,
                    static_cast<int>(cfg.sus.size())};
    });
    return rows;
}

}  // namespace stopsec
