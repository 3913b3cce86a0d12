#include "stopsec/types.hpp"

#include <cstdio>

namespace stopsec {

std::string to_hex7(uint32_t value) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%07x", value);
    return buf;
}

uint32_t parse_hex7(const std::string& s) {
    std::string t = s;
    if (t.rfind("0x", 0) == 0 || t.rfind("0X", 0) == 0) t = t.substr(2);
    if (t.empty() || t.size() > 8) throw std::invalid_argument("parse_hex7: bad literal '" + s + "'");
    uint32_t v = 0;
    for (char c : t) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<uint32_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<uint32_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<uint32_t>(c - 'A' + 10);
        else throw std::invalid_argument("parse_hex7: bad literal '" + s + "'");
    }
    return v;
}

}  // namespace stopsec
