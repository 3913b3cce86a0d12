#pragma once

#include <string>
#include <vector>

#include "stopsec/types.hpp"

namespace stopsec {

// A finite run of complex baseband samples. This is the signal currency
// passed between the modulator, the channel and the detector.
struct IqBlock {
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    std::string origin_tag;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

double mean_power(const IqBlock& block);
double total_energy(const IqBlock& block);

// On-disk format: little-endian interleaved float32 I/Q pairs, plus a
// one-line JSON sidecar at <path>.json carrying sample_rate_hz and origin_tag.
void write_iq(const std::string& path, const IqBlock& block);
IqBlock read_iq(const std::string& path);

}  // namespace stopsec
