#include "stopsec/iq.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace stopsec {

double mean_power(const IqBlock& block) {
    if (block.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : block.samples) acc += std::norm(s);
    return acc / static_cast<double>(block.samples.size());
}

double total_energy(const IqBlock& block) {
    double acc = 0.0;
    for (const auto& s : block.samples) acc += std::norm(s);
    return acc;
}

void write_iq(const std::string& path, const IqBlock& block) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_iq: cannot open " + path);
    std::vector<float> buf(block.samples.size() * 2);
    for (size_t i = 0; i < block.samples.size(); ++i) {
        buf[2 * i] = static_cast<float>(block.samples[i].real());
        buf[2 * i + 1] = static_cast<float>(block.samples[i].imag());
    }
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));

    nlohmann::json side{{"sample_rate_hz", block.sample_rate_hz},
                        {"origin_tag", block.origin_tag}};
    std::ofstream sf(path + ".json");
    if (!sf) throw std::runtime_error("write_iq: cannot open " + path + ".json");
    sf << side.dump() << "\n";
}

IqBlock read_iq(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("read_iq: cannot open " + path);
    auto bytes = static_cast<size_t>(f.tellg());
    f.seekg(0);
    if (bytes % (2 * sizeof(float)) != 0)
        throw std::runtime_error("read_iq: truncated IQ file " + path);
    std::vector<float> buf(bytes / sizeof(float));
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));

    IqBlock block;
    block.samples.resize(buf.size() / 2);
    for (size_t i = 0; i < block.samples.size(); ++i)
        block.samples[i] = {static_cast<double>(buf[2 * i]), static_cast<double>(buf[2 * i + 1])};

    std::ifstream sf(path + ".json");
    if (sf) {
        nlohmann::json side = nlohmann::json::parse(sf);
        block.sample_rate_hz = side.value("sample_rate_hz", 0.0);
        block.origin_tag = side.value("origin_tag", "");
    }
    return block;
}

}  // namespace stopsec
