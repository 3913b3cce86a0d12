#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "stopsec/frame.hpp"
#include "stopsec/types.hpp"

namespace stopsec {

// Row written by the PU when a watermarked interferer is decoded.
struct InterferenceReport {
    Pseudonym pseudonym;
    double timestamp_s = 0.0;  // simulated or wall time, caller's choice
    std::string channel_id;
    std::string location;  // optional

    bool operator==(const InterferenceReport&) const = default;
};

enum class Role { kSecondaryUser, kPrimaryUser };

struct Permissions {
    bool read = false;
    bool write = false;
};

struct DbConfig {
    double ttl_seconds = 10.0;
    std::map<Role, Permissions> role_policy = {
        {Role::kSecondaryUser, {true, false}},
        {Role::kPrimaryUser, {true, true}},
    };
    double baseline_latency_tb_s = 0.005;
    double concurrency_alpha = 0.0;

    void validate() const { require(ttl_seconds > 0.0, "DbConfig: TTL must be positive"); }

    // Default role policy (PU read+write, SU read-only) with the given knobs.
    static DbConfig make(double ttl_s, double t_b_s = 0.005, double alpha = 0.0) {
        DbConfig cfg;
        cfg.ttl_seconds = ttl_s;
        cfg.baseline_latency_tb_s = t_b_s;
        cfg.concurrency_alpha = alpha;
        return cfg;
    }
};

struct WriteReceipt {
    uint64_t sequence = 0;       // global serialized write order
    bool replaced_older = false; // an unexpired matching entry was deleted
};

// Embedded interference-report store: one serialized writer, any number of
// concurrent readers, atomic row visibility. Time is always passed in by the
// caller so simulations stay deterministic. An optional journal file makes
// the store single-file persistent; replaying the journal restores it.
class InterferenceDb {
public:
    explicit InterferenceDb(DbConfig cfg = {});
    // Journaled single-file mode: replays the journal, appends from then on.
    InterferenceDb(const std::string& journal_path, DbConfig cfg);

    // Inserts the report; an unexpired row with the same pseudonym and
    // channel is deleted first.
    WriteReceipt write_report(const InterferenceReport& r, Role role);

    std::optional<InterferenceReport> query_pseudonym(Pseudonym p, const std::string& channel_id,
                                                      double now_s, Role role) const;

    size_t purge_expired(double now_s);
    size_t row_count() const;
    std::vector<InterferenceReport> snapshot(double now_s) const;

    const DbConfig& config() const { return cfg_; }

private:
    void check(Role role, bool need_write) const;
    void journal_append(const std::string& line);

    DbConfig cfg_;
    mutable std::shared_mutex mu_;
    std::map<std::pair<uint32_t, std::string>, InterferenceReport> rows_;
    uint64_t write_seq_ = 0;
    std::string journal_path_;
};

// Closed-form scalability models, evaluated by the bench harness.
double size_model_bytes(double n_users, double reports_per_user, double report_size_bytes);
double latency_model_s(double t_b_s, double alpha, double concurrent_users);

// Nonnegative least-squares fit of the concurrency factor from measured
// (n_clients, mean_latency) points; t_b is the single-client baseline.
double fit_concurrency_alpha(const std::vector<std::pair<double, double>>& points, double t_b_s);

enum class BenchMode { kRead, kWrite };

struct BenchStats {
    BenchMode mode = BenchMode::kRead;
    int n_clients = 0;
    double mean_ms = 0.0;
    double p95_ms = 0.0;
    double throughput_ops_s = 0.0;
};

// Closed-loop clients hammering the store. Client counts above the thread
// cap are multiplexed onto pooled threads (documented in the README).
BenchStats bench_concurrent(InterferenceDb& db, BenchMode mode, int n_clients,
                            int ops_per_client, uint64_t seed = 1);

}  // namespace stopsec
