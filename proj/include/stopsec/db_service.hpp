#pragma once

#include <map>
#include <memory>
#include <string>
#include <thread>

#include "stopsec/db.hpp"

namespace stopsec {

// Minimal HTTP front-end for the interference store.
//
//   POST /reports   body {"pseudonym":"0x0123abc","channel":"ch0","timestamp_s":1.5,
//                         "location":"..."}        -> 201 {"sequence":n,"replaced_older":b}
//   GET  /reports?pseudonym=0123abc&channel=ch0    -> 200 row | 404 {"error":"not found"}
//
// Authorization: Bearer <token>; tokens map to roles. Lookups use the
// caller-supplied now_s query parameter when present, wall time otherwise.
class DbHttpService {
public:
    DbHttpService(InterferenceDb& db, std::map<std::string, Role> tokens);
    ~DbHttpService();

    // Binds 127.0.0.1 on the given port (0 picks a free one); starts the
    // serving thread. Returns the bound port.
    int start(int port = 0);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace stopsec
