#include "stopsec/db.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "stopsec/parallel.hpp"

namespace stopsec {

InterferenceDb::InterferenceDb(DbConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

InterferenceDb::InterferenceDb(const std::string& journal_path, DbConfig cfg)
    : InterferenceDb(std::move(cfg)) {
    journal_path_ = journal_path;
    std::ifstream f(journal_path);
    std::string line;
    while (f && std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string op = j.at("op").get<std::string>();
        if (op == "insert") {
            InterferenceReport r;
            r.pseudonym.value = parse_hex7(j.at("pseudonym").get<std::string>());
            r.timestamp_s = j.at("timestamp_s").get<double>();
            r.channel_id = j.at("channel_id").get<std::string>();
            r.location = j.value("location", "");
            rows_[{r.pseudonym.value, r.channel_id}] = r;
        } else if (op == "delete") {
            rows_.erase({parse_hex7(j.at("pseudonym").get<std::string>()),
                         j.at("channel_id").get<std::string>()});
        }
    }
}

void InterferenceDb::check(Role role, bool need_write) const {
    auto it = cfg_.role_policy.find(role);
    const Permissions perms = it == cfg_.role_policy.end() ? Permissions{} : it->second;
    if (need_write ? !perms.write : !perms.read)
        throw AuthorizationError(need_write ? "write_report: role lacks WRITE permission"
                                            : "query_pseudonym: role lacks READ permission");
}

void InterferenceDb::journal_append(const std::string& line) {
    if (journal_path_.empty()) return;
    std::ofstream f(journal_path_, std::ios::app);
    f << line << "\n";
}

WriteReceipt InterferenceDb::write_report(const InterferenceReport& r, Role role) {
    check(role, true);
    std::unique_lock lock(mu_);
    const auto key = std::make_pair(r.pseudonym.value, r.channel_id);
    auto it = rows_.find(key);
    WriteReceipt receipt;
    if (it != rows_.end()) {
        // Match-based deletion: the older entry goes away before the insert.
        receipt.replaced_older = it->second.timestamp_s + cfg_.ttl_seconds >= r.timestamp_s;
        rows_.erase(it);
        journal_append(nlohmann::json{{"op", "delete"},
                                      {"pseudonym", r.pseudonym.hex()},
                                      {"channel_id", r.channel_id}}
                           .dump());
    }
    rows_[key] = r;
    receipt.sequence = ++write_seq_;
    journal_append(nlohmann::json{{"op", "insert"},
                                  {"pseudonym", r.pseudonym.hex()},
                                  {"timestamp_s", r.timestamp_s},
                                  {"channel_id", r.channel_id},
                                  {"location", r.location}}
                       .dump());
    return receipt;
}

std::optional<InterferenceReport> InterferenceDb::query_pseudonym(Pseudonym p,
                                                                  const std::string& channel_id,
                                                                  double now_s, Role role) const {
    check(role, false);
    std::shared_lock lock(mu_);
    auto it = rows_.find({p.value, channel_id});
    if (it == rows_.end()) return std::nullopt;
    if (it->second.timestamp_s + cfg_.ttl_seconds < now_s) return std::nullopt;  // lazy expiry
    return it->second;
}

size_t InterferenceDb::purge_expired(double now_s) {
    std::unique_lock lock(mu_);
    size_t removed = 0;
    for (auto it = rows_.begin(); it != rows_.end();) {
        if (it->second.timestamp_s + cfg_.ttl_seconds < now_s) {
            journal_append(nlohmann::json{{"op", "delete"},
                                          {"pseudonym", Pseudonym{it->first.first}.hex()},
                                          {"channel_id", it->first.second}}
                               .dump());
            it = rows_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

size_t InterferenceDb::row_count() const {
    std::shared_lock lock(mu_);
    return rows_.size();
}

std::vector<InterferenceReport> InterferenceDb::snapshot(double now_s) const {
    std::shared_lock lock(mu_);
    std::vector<InterferenceReport> out;
    for (const auto& [key, r] : rows_)
        if (r.timestamp_s + cfg_.ttl_seconds >= now_s) out.push_back(r);
    return out;
}

double size_model_bytes(double n_users, double reports_per_user, double report_size_bytes) {
    require(n_users >= 0 && reports_per_user >= 0 && report_size_bytes >= 0,
            "size_model: inputs must be non-negative");
    return n_users * reports_per_user * report_size_bytes;
}

double latency_model_s(double t_b_s, double alpha, double concurrent_users) {
    require(t_b_s >= 0 && alpha >= 0 && concurrent_users >= 0,
            "latency_model: inputs must be non-negative");
    return t_b_s * (1.0 + alpha * (concurrent_users - 1.0));
}

double fit_concurrency_alpha(const std::vector<std::pair<double, double>>& points, double t_b_s) {
    require(t_b_s > 0, "fit_concurrency_alpha: baseline must be positive");
    double num = 0.0, den = 0.0;
    for (const auto& [uq, latency] : points) {
        const double x = uq - 1.0;
        num += x * (latency / t_b_s - 1.0);
        den += x * x;
    }
    if (den <= 0.0) return 0.0;
    return std::max(0.0, num / den);  // the model's domain is alpha >= 0
}

BenchStats bench_concurrent(InterferenceDb& db, BenchMode mode, int n_clients,
                            int ops_per_client, uint64_t seed) {
    require(n_clients > 0 && ops_per_client > 0, "bench_concurrent: counts must be positive");
    using clock = std::chrono::steady_clock;

    const int n_threads = std::min(n_clients, 256);
    std::vector<std::vector<double>> latencies(static_cast<size_t>(n_threads));
    std::vector<std::thread> workers;
    const auto t0 = clock::now();

    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            GaussianRng rng(derive_seed(seed, static_cast<uint64_t>(t)));
            auto& lat = latencies[static_cast<size_t>(t)];
            // Clients are distributed over the pool; each runs closed-loop.
            int clients_here = n_clients / n_threads + (t < n_clients % n_threads ? 1 : 0);
            for (int c = 0; c < clients_here; ++c) {
                for (int op = 0; op < ops_per_client; ++op) {
                    Pseudonym p{static_cast<uint32_t>(rng.bits() & Pseudonym::kMax)};
                    const auto start = clock::now();
                    if (mode == BenchMode::kRead) {
                        (void)db.query_pseudonym(p, "bench", 0.0, Role::kSecondaryUser);
                    } else {
                        db.write_report({p, 0.0, "bench", ""}, Role::kPrimaryUser);
                    }
                    const auto end = clock::now();
                    lat.push_back(std::chrono::duration<double, std::milli>(end - start).count());
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    const double wall_s = std::chrono::duration<double>(clock::now() - t0).count();

    std::vector<double> all;
    for (auto& v : latencies) all.insert(all.end(), v.begin(), v.end());
    std::sort(all.begin(), all.end());

    BenchStats stats;
    stats.mode = mode;
    stats.n_clients = n_clients;
    double sum = 0.0;
    for (double v : all) sum += v;
    stats.mean_ms = all.empty() ? 0.0 : sum / static_cast<double>(all.size());
    stats.p95_ms = all.empty() ? 0.0 : all[static_cast<size_t>(0.95 * (all.size() - 1))];
    stats.throughput_ops_s = wall_s > 0 ? static_cast<double>(all.size()) / wall_s : 0.0;
    return stats;
}

}  // namespace stopsec
