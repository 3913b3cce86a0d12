// stopsec: command-line front end for the simulation experiments.
//
// Every subcommand reads a JSON config (comments allowed), writes CSV/JSONL
// artifacts into --out, and drops a manifest.json that is sufficient to
// rerun the exact experiment. Progress goes to stderr; stdout stays clean.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "stopsec/ber.hpp"
#include "stopsec/db.hpp"
#include "stopsec/parallel.hpp"
#include "stopsec/scenario.hpp"
#include "stopsec/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stopsec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;  // 0: take from config
    int verbosity = 0;
};

json load_config(const CommonArgs& args) {
    if (args.config_path.empty()) return json::object();
    std::ifstream f(args.config_path);
    if (!f) throw std::invalid_argument("cannot open config file: " + args.config_path);
    return json::parse(f, nullptr, true, /*ignore_comments=*/true);
}

void write_manifest(const CommonArgs& args, const std::string& subcommand, const json& config,
                    uint64_t seed, int trials) {
    json m{{"subcommand", subcommand},
           {"config", config},
           {"seed", seed},
           {"trials", trials},
           {"threads", thread_budget()},
           {"version", kVersion}};
    std::ofstream f(fs::path(args.out_dir) / "manifest.json");
    f << m.dump(2) << "\n";
}

std::ofstream open_csv(const CommonArgs& args, const std::string& name, const std::string& header) {
    fs::create_directories(args.out_dir);
    std::ofstream f(fs::path(args.out_dir) / name);
    if (!f) throw std::runtime_error("cannot open output file " + name);
    f << header << "\n";
    return f;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

OfdmConfig ofdm_from(const json& cfg) {
    if (!cfg.contains("ofdm")) return OfdmConfig::for_fft_size(64);
    json wrapper{{"ofdm", cfg.at("ofdm")}};
    return ScenarioConfig::from_json(wrapper).ofdm;
}

PseudonymChannel channel_from(const json& cfg) {
    PseudonymChannel ch;
    if (!cfg.contains("channel")) return ch;
    const json& c = cfg.at("channel");
    ch.multipath = c.value("multipath", true);
    ch.profile.k_factor_db = c.value("k_factor_db", ch.profile.k_factor_db);
    ch.profile.rms_delay_spread_s = c.value("rms_delay_spread_us", 0.4) * 1e-6;
    ch.profile.n_taps = c.value("n_taps", ch.profile.n_taps);
    ch.profile.coherence_time_s = c.value("coherence_time_s", ch.profile.coherence_time_s);
    return ch;
}

ConfidenceRule rule_from(const json& cfg) {
    ConfidenceRule rule;
    if (!cfg.contains("confidence")) return rule;
    const json& c = cfg.at("confidence");
    rule.confidence = c.value("level", rule.confidence);
    rule.rel_err = c.value("rel_err", rule.rel_err);
    rule.max_bits = c.value("max_bits", rule.max_bits);
    return rule;
}

struct SchemeSpec {
    std::string label;
    WatermarkScheme scheme;
};

SchemeSpec parse_scheme(const json& s, const json& cfg) {
    const std::string code_name = cfg.value("code", "MSEQ15");
    std::string kind;
    double alpha = 0.2;
    if (s.is_string()) {
        std::string text = s.get<std::string>();
        auto colon = text.find(':');
        kind = text.substr(0, colon);
        if (colon != std::string::npos) alpha = std::stod(text.substr(colon + 1));
    } else {
        kind = s.value("kind", "stopsec");
        alpha = s.value("modulation_index", 0.2);
    }
    const ChipCode code = builtin_code(s.is_object() ? s.value("code", code_name) : code_name);
    if (kind == "stopsec")
        return {"stopsec",
                WatermarkScheme::stopsec(code, s.is_object() ? s.value("n_pseudonym_subcarriers", 1)
                                                             : 1)};
    if (kind == "cm_fullband")
        return {"cm_fullband_" + csv_num(alpha), WatermarkScheme::cm_fullband(code, alpha)};
    if (kind == "pam_fullband")
        return {"pam_fullband_" + csv_num(alpha), WatermarkScheme::pam_fullband(alpha)};
    throw std::invalid_argument("unknown scheme kind: " + kind);
}

std::vector<double> grid_from(const json& cfg, const char* key,
                              const std::vector<double>& fallback) {
    if (!cfg.contains(key)) return fallback;
    std::vector<double> grid;
    for (const auto& v : cfg.at(key)) grid.push_back(v.get<double>());
    return grid;
}

int cmd_ber_pseudonym(const CommonArgs& args) {
    json cfg = load_config(args);
    const OfdmConfig ofdm = ofdm_from(cfg);
    const PseudonymChannel channel = channel_from(cfg);
    const ConfidenceRule rule = rule_from(cfg);
    const uint64_t seed = args.seed_set ? args.seed : cfg.value("seed", uint64_t{1});

    if (!cfg.contains("schemes") || cfg.at("schemes").empty())
        throw std::invalid_argument("ber-pseudonym: config must list at least one scheme");
    const std::vector<double> grid = grid_from(
        cfg, "ebno_grid_db", {-13, -12, -11, -10, -9, -8, -7, -6, -5, -4, -3});

    for (const auto& s : cfg.at("schemes")) {
        SchemeSpec spec = parse_scheme(s, cfg);
        std::cerr << "[ber-pseudonym] scheme " << spec.label << "\n";
        auto curve = measure_pseudonym_ber(ofdm, spec.scheme, channel, grid, seed, rule);
        auto f = open_csv(args, "ber_pseudonym_" + spec.label + ".csv", "ebno_db,ber,n_bits");
        for (const auto& p : curve)
            f << csv_num(p.ebno_db) << ',' << csv_num(p.ber) << ',' << p.n_bits << "\n";
    }
    write_manifest(args, "ber-pseudonym", cfg, seed, 1);
    return kExitOk;
}

int cmd_ber_data(const CommonArgs& args) {
    json cfg = load_config(args);
    const OfdmConfig ofdm = ofdm_from(cfg);
    const ConfidenceRule rule = rule_from(cfg);
    const uint64_t seed = args.seed_set ? args.seed : cfg.value("seed", uint64_t{1});
    const std::vector<double> grid =
        grid_from(cfg, "ebno_grid_db", {3, 4, 5, 6, 7, 8, 9, 10});

    std::vector<std::string> schemes =
        cfg.contains("schemes") ? cfg.at("schemes").get<std::vector<std::string>>()
                                : std::vector<std::string>{"unwatermarked", "stopsec",
                                                           "cm_fullband:0.2"};
    if (schemes.empty()) throw std::invalid_argument("ber-data: empty scheme list");

    for (const auto& text : schemes) {
        auto colon = text.find(':');
        const std::string kind = text.substr(0, colon);
        const double alpha = colon == std::string::npos ? 0.2 : std::stod(text.substr(colon + 1));
        DataBerScheme scheme;
        if (kind == "unwatermarked") scheme = DataBerScheme::kUnwatermarked;
        else if (kind == "stopsec") scheme = DataBerScheme::kStopsec;
        else if (kind == "cm_fullband") scheme = DataBerScheme::kCmFullband;
        else if (kind == "pam_fullband") scheme = DataBerScheme::kPamFullband;
        else throw std::invalid_argument("ber-data: unknown scheme " + text);

        std::cerr << "[ber-data] scheme " << text << "\n";
        auto curve = measure_data_ber(ofdm, grid, scheme, alpha, seed, rule);
        std::string label = kind + (colon == std::string::npos ? "" : "_" + csv_num(alpha));
        auto f = open_csv(args, "ber_data_" + label + ".csv", "ebno_db,ber,n_bits");
        for (const auto& p : curve)
            f << csv_num(p.ebno_db) << ',' << csv_num(p.ber) << ',' << p.n_bits << "\n";
    }
    write_manifest(args, "ber-data", cfg, seed, 1);
    return kExitOk;
}

int cmd_sweep_latency(const CommonArgs& args) {
    json cfg = load_config(args);
    ScenarioConfig tmpl = ScenarioConfig::from_json(cfg);
    if (args.seed_set) tmpl.master_seed = args.seed;
    const int trials = args.trials > 0 ? args.trials : cfg.value("trials", 10);
    const std::vector<double> grid =
        grid_from(cfg, "snr_grid_db", {-12, -10, -8, -6, -4, 0});

    std::cerr << "[sweep-latency] " << grid.size() << " points x " << trials << " trials\n";
    auto rows = sweep_latency(tmpl, grid, trials);
    auto f = open_csv(args, "latency_sweep.csv", "snr_db,mean_latency_s,p95_latency_s,stop_rate");
    for (const auto& r : rows)
        f << csv_num(r.snr_db) << ',' << csv_num(r.mean_latency_s) << ','
          << csv_num(r.p95_latency_s) << ',' << csv_num(r.stop_rate) << "\n";
    write_manifest(args, "sweep-latency", cfg, tmpl.master_seed, trials);
    return kExitOk;
}

int cmd_run_scenario(const CommonArgs& args) {
    json cfg = load_config(args);
    ScenarioConfig scenario = ScenarioConfig::from_json(cfg);
    if (args.seed_set) scenario.master_seed = args.seed;

    std::cerr << "[run-scenario] " << scenario.sus.size() << " SU(s), "
              << scenario.sim_duration_s << " s\n";
    ScenarioResult result = run_scenario(scenario);

    fs::create_directories(args.out_dir);
    {
        std::ofstream ev(fs::path(args.out_dir) / "events.jsonl");
        for (const auto& line : result.event_log) ev << line << "\n";
    }
    json summary{{"t_interference_start_s", result.latency.t_interference_start_s},
                 {"t_all_stopped_s", result.latency.t_all_stopped_s},
                 {"reports_written", result.latency.reports_written},
                 {"frames_transmitted", result.frames_transmitted},
                 {"frames_matched", result.frames_matched},
                 {"phantom_reports", result.phantom_reports},
                 {"stop_order", result.stop_order},
                 {"per_su_stop_times_s", result.latency.per_su_stop_times_s}};
    std::ofstream sf(fs::path(args.out_dir) / "summary.json");
    sf << summary.dump(2) << "\n";
    write_manifest(args, "run-scenario", cfg, scenario.master_seed, 1);
    return kExitOk;
}

int cmd_detection_prob(const CommonArgs& args) {
    json cfg = load_config(args);
    ScenarioConfig tmpl = ScenarioConfig::from_json(cfg);
    if (args.seed_set) tmpl.master_seed = args.seed;
    const int n_frames = cfg.value("n_frames", 100);
    const std::vector<double> grid = grid_from(cfg, "snr_grid_db", {-12, -10, -8, -6, -4});

    std::cerr << "[detection-prob] " << grid.size() << " points, " << n_frames << " frames\n";
    auto rows = measure_detection_probability(tmpl, grid, n_frames);
    auto f = open_csv(args, "detection_prob.csv", "snr_db,p_detect,n_sus");
    for (const auto& r : rows)
        f << csv_num(r.snr_db) << ',' << csv_num(r.p_detect) << ',' << r.n_sus << "\n";
    write_manifest(args, "detection-prob", cfg, tmpl.master_seed, n_frames);
    return kExitOk;
}

int cmd_db_bench(const CommonArgs& args) {
    json cfg = load_config(args);
    const uint64_t seed = args.seed_set ? args.seed : cfg.value("seed", uint64_t{1});
    const int ops = cfg.value("ops_per_client", 20);
    std::vector<int> counts = cfg.contains("client_counts")
                                  ? cfg.at("client_counts").get<std::vector<int>>()
                                  : std::vector<int>{1, 10, 100, 1000, 10000};
    std::vector<std::string> modes = cfg.contains("modes")
                                         ? cfg.at("modes").get<std::vector<std::string>>()
                                         : std::vector<std::string>{"read", "write"};

    InterferenceDb db(DbConfig::make(cfg.value("ttl_s", 3600.0)));
    // Seed fixture rows so reads have something to hit.
    GaussianRng rng(seed);
    for (int i = 0; i < cfg.value("fixture_rows", 1000); ++i)
        db.write_report({Pseudonym{static_cast<uint32_t>(rng.bits() & Pseudonym::kMax)}, 0.0,
                         "bench", ""},
                        Role::kPrimaryUser);

    auto f = open_csv(args, "db_bench.csv", "mode,n_clients,mean_ms,p95_ms,throughput");
    for (const auto& mode : modes) {
        BenchMode m;
        if (mode == "read") m = BenchMode::kRead;
        else if (mode == "write") m = BenchMode::kWrite;
        else throw std::invalid_argument("db-bench: unknown mode " + mode);
        for (int n : counts) {
            std::cerr << "[db-bench] " << mode << " x" << n << "\n";
            BenchStats s = bench_concurrent(db, m, n, ops, seed);
            f << mode << ',' << n << ',' << csv_num(s.mean_ms) << ',' << csv_num(s.p95_ms) << ','
              << csv_num(s.throughput_ops_s) << "\n";
        }
    }
    write_manifest(args, "db-bench", cfg, seed, ops);
    return kExitOk;
}

int cmd_gen_config(const CommonArgs& args) {
    fs::create_directories(args.out_dir);
    const fs::path path = fs::path(args.out_dir) / "scenario.json";
    std::ofstream f(path);
    f << ScenarioConfig::default_config_text();
    std::cerr << "[gen-config] wrote " << path.string() << "\n";
    write_manifest(args, "gen-config", json::object(), 0, 0);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"StopSec spectrum-sharing protocol simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", args.config_path, "JSON config path");
        if (needs_config) opt->required();
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "seed override")->each([&](const std::string&) {
            args.seed_set = true;
        });
        sub->add_option("--trials", args.trials, "Monte-Carlo trials override");
        sub->add_flag("-v", args.verbosity, "verbose progress");
    };

    add_common(app.add_subcommand("ber-pseudonym", "P-bit error rate curves per scheme"), true);
    add_common(app.add_subcommand("ber-data", "data-link BER curves per scheme"), false);
    add_common(app.add_subcommand("sweep-latency", "stop latency vs SNR"), false);
    add_common(app.add_subcommand("run-scenario", "one closed-loop run with event log"), false);
    add_common(app.add_subcommand("detection-prob", "pseudonym frame detection probability"),
               false);
    add_common(app.add_subcommand("db-bench", "interference DB concurrency benchmark"), false);
    add_common(app.add_subcommand("gen-config", "write a commented default scenario config"),
               false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        if (sub == "ber-pseudonym") return cmd_ber_pseudonym(args);
        if (sub == "ber-data") return cmd_ber_data(args);
        if (sub == "sweep-latency") return cmd_sweep_latency(args);
        if (sub == "run-scenario") return cmd_run_scenario(args);
        if (sub == "detection-prob") return cmd_detection_prob(args);
        if (sub == "db-bench") return cmd_db_bench(args);
        if (sub == "gen-config") return cmd_gen_config(args);
        std::cerr << "unknown subcommand\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
