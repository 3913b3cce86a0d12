#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stopsec {

using cplx = std::complex<double>;
using Bits = std::vector<uint8_t>;  // one bit per element, values 0/1

// Thrown when a receiver cannot lock onto the training preamble.
struct SyncError : std::runtime_error {
    explicit SyncError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by database operations invoked without the required permission.
struct AuthorizationError : std::runtime_error {
    explicit AuthorizationError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string to_hex7(uint32_t value);          // zero-padded 7 hex digits
uint32_t parse_hex7(const std::string& s);    // inverse of to_hex7, accepts 0x prefix

}  // namespace stopsec
