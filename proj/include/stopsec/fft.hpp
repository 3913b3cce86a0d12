#pragma once

#include <cstddef>
#include <vector>

#include "stopsec/types.hpp"

namespace stopsec {

// Radix-2 FFT with precomputed twiddles. Sizes must be powers of two.
// forward() is the unnormalized DFT; inverse() includes the 1/N factor,
// so inverse(forward(x)) == x.
class Fft {
public:
    explicit Fft(size_t n);

    size_t size() const { return n_; }

    void forward(std::vector<cplx>& data) const { transform(data, false); }
    void inverse(std::vector<cplx>& data) const;

private:
    void transform(std::vector<cplx>& data, bool inv) const;

    size_t n_;
    std::vector<size_t> bitrev_;
    std::vector<cplx> twiddle_;  // exp(-2i*pi*k/n), k in [0, n/2)
};

// Shared per-thread plan cache; safe because each thread owns its cache.
const Fft& fft_plan(size_t n);

// Cross-correlation of a window against a template:
//   out[lag] = sum_m conj(tmpl[m]) * window[lag + m],
// for lag in [0, window.size() - tmpl.size()]. Uses overlap-save FFT when the
// window is long, direct evaluation otherwise; both produce the same values
// up to rounding.
std::vector<cplx> cross_correlate(const std::vector<cplx>& window,
                                  const std::vector<cplx>& tmpl);

}  // namespace stopsec
