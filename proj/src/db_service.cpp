#include "stopsec/db_service.hpp"

#include <chrono>

#include <nlohmann/json.hpp>

#include "httplib.h"

namespace stopsec {

namespace {

double wall_time_s() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

struct DbHttpService::Impl {
    InterferenceDb& db;
    std::map<std::string, Role> tokens;
    httplib::Server server;
    std::thread thread;
    int port = 0;

    Impl(InterferenceDb& d, std::map<std::string, Role> t) : db(d), tokens(std::move(t)) {}

    std::optional<Role> role_of(const httplib::Request& req) const {
        std::string auth = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (auth.rfind(prefix, 0) != 0) return std::nullopt;
        auto it = tokens.find(auth.substr(prefix.size()));
        if (it == tokens.end()) return std::nullopt;
        return it->second;
    }
};

DbHttpService::DbHttpService(InterferenceDb& db, std::map<std::string, Role> tokens)
    : impl_(std::make_unique<Impl>(db, std::move(tokens))) {
    auto& server = impl_->server;

    server.Post("/reports", [this](const httplib::Request& req, httplib::Response& res) {
        auto role = impl_->role_of(req);
        if (!role) {
            res.status = 401;
            res.set_content(R"({"error":"missing or unknown token"})", "application/json");
            return;
        }
        try {
            nlohmann::json body = nlohmann::json::parse(req.body);
            InterferenceReport r;
            r.pseudonym.value = parse_hex7(body.at("pseudonym").get<std::string>());
            r.channel_id = body.at("channel").get<std::string>();
            r.timestamp_s = body.value("timestamp_s", wall_time_s());
            r.location = body.value("location", "");
            WriteReceipt receipt = impl_->db.write_report(r, *role);
            res.status = 201;
            res.set_content(nlohmann::json{{"sequence", receipt.sequence},
                                           {"replaced_older", receipt.replaced_older}}
                                .dump(),
                            "application/json");
        } catch (const AuthorizationError& e) {
            res.status = 403;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server.Get("/reports", [this](const httplib::Request& req, httplib::Response& res) {
        auto role = impl_->role_of(req);
        if (!role) {
            res.status = 401;
            res.set_content(R"({"error":"missing or unknown token"})", "application/json");
            return;
        }
        try {
            Pseudonym p{parse_hex7(req.get_param_value("pseudonym"))};
            const std::string channel = req.get_param_value("channel");
            const double now = req.has_param("now_s")
                                   ? std::stod(req.get_param_value("now_s"))
                                   : wall_time_s();
            auto row = impl_->db.query_pseudonym(p, channel, now, *role);
            if (!row) {
                res.status = 404;
                res.set_content(R"({"error":"not found"})", "application/json");
                return;
            }
            res.set_content(nlohmann::json{{"pseudonym", row->pseudonym.hex()},
                                           {"channel", row->channel_id},
                                           {"timestamp_s", row->timestamp_s},
                                           {"location", row->location}}
                                .dump(),
                            "application/json");
        } catch (const AuthorizationError& e) {
            res.status = 403;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    });
}

DbHttpService::~DbHttpService() { stop(); }

int DbHttpService::start(int port) {
    if (port == 0) {
        impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    } else {
        if (!impl_->server.bind_to_port("127.0.0.1", port))
            throw std::runtime_error("DbHttpService: cannot bind port " + std::to_string(port));
        impl_->port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->port;
}

void DbHttpService::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
    if (impl_ && impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace stopsec
