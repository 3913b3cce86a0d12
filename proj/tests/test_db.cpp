#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "stopsec/db.hpp"
#include "stopsec/db_service.hpp"

using namespace stopsec;

namespace {

InterferenceReport report(uint32_t p, double t, const std::string& ch = "ch0") {
    return {Pseudonym{p}, t, ch, ""};
}

}  // namespace

TEST_CASE("write/query basics with match-based deletion") {
    InterferenceDb db(DbConfig::make(10.0));

    CHECK(!db.query_pseudonym(Pseudonym{0x123ABCD}, "ch0", 0.0, Role::kSecondaryUser));

    db.write_report(report(0x123ABCD, 1.0), Role::kPrimaryUser);
    auto row = db.query_pseudonym(Pseudonym{0x123ABCD}, "ch0", 1.5, Role::kSecondaryUser);
    REQUIRE(row.has_value());
    CHECK(row->timestamp_s == 1.0);

    // Same pseudonym written twice: one row, the newer timestamp.
    WriteReceipt receipt = db.write_report(report(0x123ABCD, 2.0), Role::kPrimaryUser);
    CHECK(receipt.replaced_older);
    CHECK(db.row_count() == 1);
    row = db.query_pseudonym(Pseudonym{0x123ABCD}, "ch0", 2.5, Role::kSecondaryUser);
    REQUIRE(row.has_value());
    CHECK(row->timestamp_s == 2.0);

    // Different channel does not match.
    CHECK(!db.query_pseudonym(Pseudonym{0x123ABCD}, "ch1", 2.5, Role::kSecondaryUser));
}

TEST_CASE("ttl expiry: lazy on read and via purge") {
    InterferenceDb db(DbConfig::make(5.0));
    db.write_report(report(0x1, 0.0), Role::kPrimaryUser);
    db.write_report(report(0x2, 1.0), Role::kPrimaryUser);
    db.write_report(report(0x3, 8.0), Role::kPrimaryUser);

    CHECK(db.query_pseudonym(Pseudonym{0x1}, "ch0", 4.9, Role::kSecondaryUser).has_value());
    CHECK(!db.query_pseudonym(Pseudonym{0x1}, "ch0", 5.1, Role::kSecondaryUser).has_value());

    CHECK(db.purge_expired(9.0) == 2);  // rows 0x1 and 0x2 expired
    CHECK(db.row_count() == 1);
    CHECK(db.purge_expired(9.0) == 0);  // idempotent
    CHECK(InterferenceDb(DbConfig::make(5.0)).purge_expired(100.0) == 0);
}

TEST_CASE("role policy gates reads and writes") {
    InterferenceDb db{DbConfig{}};
    CHECK_THROWS_AS(db.write_report(report(0x5, 0.0), Role::kSecondaryUser), AuthorizationError);
    db.write_report(report(0x5, 0.0), Role::kPrimaryUser);

    DbConfig no_read;
    no_read.role_policy[Role::kSecondaryUser] = {false, false};
    InterferenceDb locked(no_read);
    locked.write_report(report(0x6, 0.0), Role::kPrimaryUser);
    CHECK_THROWS_AS(locked.query_pseudonym(Pseudonym{0x6}, "ch0", 0.0, Role::kSecondaryUser),
                    AuthorizationError);
}

TEST_CASE("visible set equals the sequential specification over random interleavings") {
    GaussianRng rng(31);
    for (int iter = 0; iter < 1000; ++iter) {
        DbConfig cfg;
        cfg.ttl_seconds = 4.0;
        InterferenceDb db(cfg);

        // Writers run concurrently; the store serializes them. Replaying the
        // receipts in sequence order into a plain map must reproduce the
        // visible set exactly.
        struct Op {
            uint64_t seq;
            InterferenceReport r;
        };
        const int n_threads = 1 + static_cast<int>(rng.bits() % 3);
        const int ops_per_thread = 1 + static_cast<int>(rng.bits() % 4);
        std::vector<std::vector<Op>> performed(static_cast<size_t>(n_threads));
        std::vector<std::vector<InterferenceReport>> plans(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t)
            for (int k = 0; k < ops_per_thread; ++k)
                plans[static_cast<size_t>(t)].push_back(
                    report(static_cast<uint32_t>(rng.bits() % 4),
                           static_cast<double>(rng.bits() % 8),
                           rng.bits() % 2 ? "ch0" : "ch1"));

        std::vector<std::thread> threads;
        for (int t = 0; t < n_threads; ++t) {
            threads.emplace_back([&, t] {
                for (const auto& r : plans[static_cast<size_t>(t)]) {
                    WriteReceipt receipt = db.write_report(r, Role::kPrimaryUser);
                    performed[static_cast<size_t>(t)].push_back({receipt.sequence, r});
                }
            });
        }
        for (auto& th : threads) th.join();

        std::vector<Op> ordered;
        for (const auto& v : performed) ordered.insert(ordered.end(), v.begin(), v.end());
        std::sort(ordered.begin(), ordered.end(),
                  [](const Op& a, const Op& b) { return a.seq < b.seq; });

        const double now = 6.0;
        std::map<std::pair<uint32_t, std::string>, InterferenceReport> model;
        for (const auto& op : ordered) model[{op.r.pseudonym.value, op.r.channel_id}] = op.r;

        auto visible = db.snapshot(now);
        size_t model_visible = 0;
        for (const auto& [key, r] : model) {
            const bool unexpired = r.timestamp_s + cfg.ttl_seconds >= now;
            if (unexpired) ++model_visible;
            auto row = db.query_pseudonym(r.pseudonym, r.channel_id, now, Role::kSecondaryUser);
            CHECK(row.has_value() == unexpired);
            if (row && unexpired) CHECK(*row == r);
        }
        CHECK(visible.size() == model_visible);
    }
}

TEST_CASE("ttl monotonicity: an absent row stays absent unless rewritten") {
    InterferenceDb db(DbConfig::make(2.0));
    db.write_report(report(0x9, 0.0), Role::kPrimaryUser);
    CHECK(!db.query_pseudonym(Pseudonym{0x9}, "ch0", 3.0, Role::kSecondaryUser));
    CHECK(!db.query_pseudonym(Pseudonym{0x9}, "ch0", 5.0, Role::kSecondaryUser));
    db.write_report(report(0x9, 6.0), Role::kPrimaryUser);
    CHECK(db.query_pseudonym(Pseudonym{0x9}, "ch0", 6.5, Role::kSecondaryUser).has_value());
}

TEST_CASE("journal persistence: replay restores the store") {
    const std::string path = "test_db_journal.jsonl";
    std::remove(path.c_str());
    {
        InterferenceDb db(path, DbConfig::make(100.0));
        db.write_report(report(0xAAAA, 1.0), Role::kPrimaryUser);
        db.write_report(report(0xBBBB, 2.0), Role::kPrimaryUser);
        db.write_report(report(0xAAAA, 3.0), Role::kPrimaryUser);  // overwrite
    }
    InterferenceDb back(path, DbConfig::make(100.0));
    CHECK(back.row_count() == 2);
    auto row = back.query_pseudonym(Pseudonym{0xAAAA}, "ch0", 3.5, Role::kSecondaryUser);
    REQUIRE(row.has_value());
    CHECK(row->timestamp_s == 3.0);
    std::remove(path.c_str());
}

TEST_CASE("size and latency models") {
    CHECK(size_model_bytes(1000, 0.01, 64) == doctest::Approx(640.0));
    CHECK(size_model_bytes(0, 1, 1) == 0.0);
    CHECK(latency_model_s(0.005, 0.3, 1) == doctest::Approx(0.005));  // single user: t_b
    CHECK(latency_model_s(0.005, 0.1, 11) == doctest::Approx(0.005 * 2.0));
    CHECK_THROWS_AS(latency_model_s(-1, 0, 1), std::invalid_argument);
}

TEST_CASE("fitted concurrency alpha from a 1/10/100-reader bench is finite and >= 0") {
    InterferenceDb db{DbConfig{}};
    GaussianRng rng(3);
    for (int i = 0; i < 500; ++i)
        db.write_report(report(static_cast<uint32_t>(rng.bits() & Pseudonym::kMax), 0.0),
                        Role::kPrimaryUser);

    std::vector<std::pair<double, double>> points;
    double t_b = 0.0;
    for (int n : {1, 10, 100}) {
        BenchStats s = bench_concurrent(db, BenchMode::kRead, n, 50, 7);
        if (n == 1) t_b = std::max(s.mean_ms, 1e-6);
        points.emplace_back(n, s.mean_ms);
    }
    const double alpha = fit_concurrency_alpha(points, t_b);
    CHECK(std::isfinite(alpha));
    CHECK(alpha >= 0.0);
}

TEST_CASE("concurrent write serialization costs more than concurrent reads") {
    InterferenceDb db{DbConfig{}};
    GaussianRng rng(5);
    for (int i = 0; i < 500; ++i)
        db.write_report(report(static_cast<uint32_t>(rng.bits() & Pseudonym::kMax), 0.0),
                        Role::kPrimaryUser);

    BenchStats reads = bench_concurrent(db, BenchMode::kRead, 100, 50, 11);
    BenchStats writes = bench_concurrent(db, BenchMode::kWrite, 100, 50, 11);
    CHECK(writes.mean_ms > reads.mean_ms);
}

TEST_CASE("http service: write, lookup, auth failures") {
    InterferenceDb db(DbConfig::make(50.0));
    DbHttpService service(db, {{"pu-token", Role::kPrimaryUser},
                               {"su-token", Role::kSecondaryUser}});
    const int port = service.start(0);
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);

    // PU writes a report.
    {
        httplib::Headers headers{{"Authorization", "Bearer pu-token"}};
        nlohmann::json body{{"pseudonym", "0abc123"}, {"channel", "ch0"}, {"timestamp_s", 4.0}};
        auto res = client.Post("/reports", headers, body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 201);
    }
    // SU finds it.
    {
        httplib::Headers headers{{"Authorization", "Bearer su-token"}};
        auto res = client.Get("/reports?pseudonym=0abc123&channel=ch0&now_s=5.0", headers);
        REQUIRE(res);
        CHECK(res->status == 200);
        nlohmann::json j = nlohmann::json::parse(res->body);
        CHECK(j.at("pseudonym") == "0abc123");
        CHECK(j.at("timestamp_s") == 4.0);
    }
    // Wrong channel: 404.
    {
        httplib::Headers headers{{"Authorization", "Bearer su-token"}};
        auto res = client.Get("/reports?pseudonym=0abc123&channel=ch9&now_s=5.0", headers);
        REQUIRE(res);
        CHECK(res->status == 404);
    }
    // SU may not write.
    {
        httplib::Headers headers{{"Authorization", "Bearer su-token"}};
        nlohmann::json body{{"pseudonym", "0abc124"}, {"channel", "ch0"}, {"timestamp_s", 4.0}};
        auto res = client.Post("/reports", headers, body.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 403);
    }
    // Unknown token: 401.
    {
        httplib::Headers headers{{"Authorization", "Bearer nope"}};
        auto res = client.Get("/reports?pseudonym=0abc123&channel=ch0", headers);
        REQUIRE(res);
        CHECK(res->status == 401);
    }
    service.stop();
}
